//! Command-line entry point. [`run`] never exits the process; the binary
//! maps [`CommandOutcome::exit_code`] onto the process status.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::closedform::{outage_from_thresholds, z_evaluate, Authority, CaseTable, EvalOptions, ZSpec};
use crate::error::{Error, Result};
use crate::events::Thresholds;
use crate::oracles::monte_carlo::{mc_z_region, McConfig};
use crate::oracles::quadrature::{z_quadrature, DEFAULT_TOL};
use crate::optimize::{minimize_outage, sweep, write_sweep_csv, GridSpec, SearchSetup};
use crate::rates::{scan_rate_region, BetaGrid, RateGrid};
use crate::scenario::{EveFadingParams, Scenario};
use crate::validation::{scenario_library, validate_library, validate_scenario, ValidationConfig};

/// Seed used by randomized commands when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 20_240_601;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

/// Exit code for each error family.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::ValidationFailed(_) => EXIT_VALIDATION,
        Error::DivergentTail { .. } | Error::NonConvergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "scf-secrecy", version, about = "Secrecy outage bounds for full-duplex compute-and-forward relaying")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableArg {
    Complete,
    AsPrinted,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Case lists used for the event probabilities.
    #[arg(long, value_enum, default_value = "complete")]
    case_table: TableArg,
    /// Value every term by quadrature instead of its closed form.
    #[arg(long)]
    strict: bool,
}

impl EvalArgs {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            table: match self.case_table {
                TableArg::Complete => CaseTable::Complete,
                TableArg::AsPrinted => CaseTable::AsPrinted,
            },
            authority: if self.strict { Authority::Strict } else { Authority::ClosedForm },
            quad_tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid step in bit/s/Hz.
    #[arg(long = "grid", default_value_t = 0.05)]
    step: f64,
    #[arg(long, default_value_t = 10.0)]
    r_a_max: f64,
    #[arg(long, default_value_t = 10.0)]
    r_b_max: f64,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        GridSpec {
            step: self.step,
            r_a_max: self.r_a_max,
            r_b_max: self.r_b_max,
            betas: BetaGrid::default(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Achievable (r_a, r_b) region at Ray.
    RateRegion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 10.0)]
        max: f64,
    },
    /// Outage bound over the (r_a, r_b) grid, with the minimizing point flagged.
    OutageSurface {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Minimizing (r_a, r_b) and the outage bound there.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Minimized bound over a range of r_s for several r_r.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// LO:HI:STEP
        #[arg(long)]
        rs: String,
        /// Comma-separated r_r values.
        #[arg(long, value_delimiter = ',', required = true)]
        rr: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Closed form vs quadrature vs Monte Carlo on every dispatched term.
    Validate {
        /// Scenario to validate; required unless --library is given.
        #[arg(long, required_unless_present = "library")]
        config: Option<PathBuf>,
        /// Validate this many seeded random scenarios instead.
        #[arg(long, conflicts_with = "config")]
        library: Option<usize>,
        /// Monte Carlo samples for the event-level check.
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        /// Monte Carlo samples per term.
        #[arg(long, default_value_t = 1_000_000)]
        term_samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// All three estimates of a single region integral.
    ZEval {
        /// A,B,upper slope,upper intercept,lower slope,lower intercept,E,F
        #[arg(long, allow_hyphen_values = true)]
        spec: String,
        /// λA,λB,λR
        #[arg(long)]
        lambdas: String,
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if informational {
                let _ = write!(out, "{text}");
                return CommandOutcome::default();
            }
            let _ = write!(err, "{text}");
            return CommandOutcome {
                exit_code: EXIT_USAGE,
                artifacts: Vec::new(),
            };
        }
    };
    let mut artifacts = Vec::new();
    match execute(cli.command, out, &mut artifacts) {
        Ok(()) => CommandOutcome {
            exit_code: EXIT_OK,
            artifacts,
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            CommandOutcome {
                exit_code: exit_code(&e),
                artifacts,
            }
        }
    }
}

fn create(path: &Path, artifacts: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let file = File::create(path)?;
    artifacts.push(path.to_path_buf());
    Ok(BufWriter::new(file))
}

fn setup(scenario: &Scenario, grid: &GridArgs, eval: &EvalArgs) -> SearchSetup {
    SearchSetup {
        channel: scenario.channel,
        fading: scenario.fading,
        model: scenario.model,
        grid: grid.spec(),
        eval: eval.options(),
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Malformed(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn parse_range(text: &str) -> Result<crate::rates::GridAxis> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("expected LO:HI:STEP, got {text:?}")))?;
    match parts[..] {
        [lo, hi, step] => crate::rates::GridAxis::new(lo, hi, step),
        _ => Err(Error::InvalidInput(format!("expected LO:HI:STEP, got {text:?}"))),
    }
}

fn execute(command: Command, out: &mut dyn Write, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    match command {
        Command::RateRegion { config, out: path, step, max } => {
            let scenario = Scenario::from_path(&config)?;
            let grid = RateGrid::uniform(0.0, max, step)?;
            let region = scan_rate_region(&scenario.channel, &grid, &BetaGrid::default(), scenario.model.mn_form)?;
            region.write_csv(create(&path, artifacts)?)?;
            writeln!(out, "{} of {} points achievable", region.feasible().count(), region.points.len())?;
        }
        Command::OutageSurface { config, out: path, grid, eval } => {
            let scenario = Scenario::from_path(&config)?;
            let s = setup(&scenario, &grid, &eval);
            let result = minimize_outage(&s, scenario.rates.r_s(), scenario.rates.r_r())?;
            result.write_surface_csv(create(&path, artifacts)?)?;
            match result.best_point() {
                Some(p) => writeln!(
                    out,
                    "best r_a = {}, r_b = {}, bound = {:e}",
                    p.r_a,
                    p.r_b,
                    p.bound.unwrap_or(f64::NAN)
                )?,
                None => writeln!(out, "empty region: no feasible (r_a, r_b)")?,
            }
        }
        Command::Optimize { config, grid, eval } => {
            let scenario = Scenario::from_path(&config)?;
            let s = setup(&scenario, &grid, &eval);
            let (r_s, r_r) = (scenario.rates.r_s(), scenario.rates.r_r());
            let result = minimize_outage(&s, r_s, r_r)?;
            let doc = match result.best_point() {
                None => json!({ "r_s": r_s, "r_r": r_r, "model": scenario.model, "empty_region": true }),
                Some(p) => {
                    let rates = crate::scenario::RateAllocation::from_total(p.r_a, r_s, p.r_b, r_r)?;
                    let thresholds = Thresholds::from_rates(
                        rates.r_0(),
                        p.r_b,
                        rates.phase2_random_rate(scenario.model.ray_rate),
                    )?;
                    let outage = outage_from_thresholds(&thresholds, &scenario.fading, &s.eval)?;
                    json!({
                        "r_s": r_s,
                        "r_r": r_r,
                        "model": scenario.model,
                        "grid_step": s.grid.step,
                        "empty_region": false,
                        "feasible_points": result.feasible().count(),
                        "best": {
                            "r_a": p.r_a,
                            "r_b": p.r_b,
                            "beta_ratio": p.beta_ratio,
                            "bound": outage.bound,
                        },
                        "outage": outage,
                    })
                }
            };
            print_json(out, &doc)?;
        }
        Command::Sweep { config, rs, rr, out: path, grid, eval } => {
            let scenario = Scenario::from_path(&config)?;
            let s = setup(&scenario, &grid, &eval);
            let rows = sweep(&s, &parse_range(&rs)?, &rr)?;
            write_sweep_csv(&rows, create(&path, artifacts)?)?;
            writeln!(out, "{} rows", rows.len())?;
        }
        Command::Validate { config, library, samples, term_samples, seed, out: path, eval } => {
            if samples == 0 || term_samples == 0 {
                return Err(Error::InvalidInput("sample counts must be >= 1".into()));
            }
            let cfg = ValidationConfig {
                term_samples,
                event_samples: samples,
                seed,
                eval: EvalOptions {
                    authority: Authority::Audit,
                    ..eval.options()
                },
                ..ValidationConfig::default()
            };
            let report = match (config, library) {
                (_, Some(n)) => validate_library(&scenario_library(seed, n), &cfg)?,
                (Some(c), None) => validate_scenario(&Scenario::from_path(&c)?, &cfg)?,
                (None, None) => unreachable!("clap requires one of --config, --library"),
            };
            let text = report.to_json();
            match &path {
                Some(p) => {
                    let mut w = create(p, artifacts)?;
                    writeln!(w, "{text}")?;
                    w.flush()?;
                }
                None => writeln!(out, "{text}")?,
            }
            let failing: Vec<String> = report
                .scenarios
                .iter()
                .filter(|s| if eval.strict { !s.strict_passed() } else { !s.passed() })
                .map(|s| s.id.to_string())
                .collect();
            writeln!(
                out,
                "{} scenario(s), {} erratum entr(ies), {} failing",
                report.scenarios.len(),
                report.errata().count(),
                failing.len()
            )?;
            if !failing.is_empty() {
                return Err(Error::ValidationFailed(format!("scenario(s) {} disagree", failing.join(", "))));
            }
        }
        Command::ZEval { spec, lambdas, phi, samples, seed } => {
            let spec = ZSpec::parse_table_tuple(&spec)?;
            let l: Vec<f64> = lambdas
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidInput(format!("expected three comma-separated rates, got {lambdas:?}")))?;
            let [la, lb, lr] = l[..] else {
                return Err(Error::InvalidInput(format!("expected three comma-separated rates, got {lambdas:?}")));
            };
            let fading = EveFadingParams::new(la, lb, lr)?;
            let closed = z_evaluate(&spec, &fading, phi)?;
            let quadrature = z_quadrature(&spec, &fading, phi, DEFAULT_TOL)?;
            let mc = mc_z_region(&spec, &fading, phi, &McConfig::new(samples, seed))?;
            print_json(
                out,
                &json!({
                    "spec": spec,
                    "closed_form": closed.value,
                    "branches": { "t2": closed.t2_branch, "t1": closed.t1_branch },
                    "quadrature": quadrature,
                    "monte_carlo": mc,
                }),
            )?;
        }
    }
    Ok(())
}
