//! Minimizes the outage bound over (r_a, r_b) for the published channel and
//! writes the surface to `outage_surface.csv`.

use scf_secrecy::closedform::EvalOptions;
use scf_secrecy::optimize::{minimize_outage, GridSpec, SearchSetup};
use scf_secrecy::scenario::{EveFadingParams, LegitimateChannel, ModelOptions};

fn main() -> scf_secrecy::Result<()> {
    let setup = SearchSetup {
        channel: LegitimateChannel::from_db(20.0, 10.0)?,
        fading: EveFadingParams::new(1.0, 2.0, 1.0)?,
        model: ModelOptions::figure_reproduction(),
        grid: GridSpec::with_step(0.05),
        eval: EvalOptions::default(),
    };
    let result = minimize_outage(&setup, 0.1, 7.0)?;
    match result.best_point() {
        Some(p) => println!(
            "best r_a = {:.2}, r_b = {:.2}, bound = {:.3e} (cases {}/{})",
            p.r_a,
            p.r_b,
            p.bound.unwrap_or(f64::NAN),
            p.case_s1.unwrap_or(0),
            p.case_s2.unwrap_or(0)
        ),
        None => println!("no feasible rate pair"),
    }
    println!("{} of {} grid points feasible", result.feasible().count(), result.surface.len());
    let path = std::env::temp_dir().join("outage_surface.csv");
    result.write_surface_csv(std::fs::File::create(&path)?)?;
    println!("surface written to {}", path.display());
    Ok(())
}
