//! Grid search over `(r_a, r_b)` for the smallest outage bound, and sweeps
//! of the minimized bound over `(r_s, r_r)`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::closedform::{outage_from_thresholds, EvalOptions};
use crate::error::{Error, Result};
use crate::events::Thresholds;
use crate::rates::{ray_secrecy_bound, relay_slack, BetaGrid, GridAxis, RatioTable};
use crate::scenario::{EveFadingParams, LegitimateChannel, ModelOptions, RateAllocation};

/// Search grid. `r_a` runs over the multiples of `step` in `[r_s, r_a_max]`
/// and `r_b` over those in `[0, r_b_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub step: f64,
    pub r_a_max: f64,
    pub r_b_max: f64,
    pub betas: BetaGrid,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 0.05,
            r_a_max: 10.0,
            r_b_max: 10.0,
            betas: BetaGrid::default(),
        }
    }
}

impl GridSpec {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    fn axes(&self, r_s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let r_a = GridAxis::new(r_s, self.r_a_max, self.step)?.points();
        let r_b = GridAxis::new(0.0, self.r_b_max, self.step)?.points();
        Ok((r_a, r_b))
    }
}

/// Everything the search needs besides the rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSetup {
    pub channel: LegitimateChannel,
    pub fading: EveFadingParams,
    pub model: ModelOptions,
    pub grid: GridSpec,
    pub eval: EvalOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub r_a: f64,
    pub r_b: f64,
    /// Ratio with the largest decodability margin, if any ratio decodes.
    pub beta_ratio: Option<f64>,
    pub feasible: bool,
    pub bound: Option<f64>,
    pub case_s1: Option<u8>,
    pub case_s2: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub r_s: f64,
    pub r_r: f64,
    /// Index into `surface`; `None` when no grid point is feasible.
    pub best: Option<usize>,
    pub surface: Vec<SurfacePoint>,
}

impl OptimizationResult {
    pub fn best_point(&self) -> Option<&SurfacePoint> {
        self.best.map(|i| &self.surface[i])
    }

    pub fn best_bound(&self) -> Option<f64> {
        self.best_point().and_then(|p| p.bound)
    }

    pub fn is_empty_region(&self) -> bool {
        self.best.is_none()
    }

    pub fn feasible(&self) -> impl Iterator<Item = &SurfacePoint> {
        self.surface.iter().filter(|p| p.feasible)
    }

    /// Columns `r_a, r_b, bound, feasible, case_s1, case_s2, beta_ratio,
    /// argmin`. Infeasible points leave `bound` and the case columns empty.
    pub fn write_surface_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r_a", "r_b", "bound", "feasible", "case_s1", "case_s2", "beta_ratio", "argmin"])?;
        for (i, p) in self.surface.iter().enumerate() {
            w.write_record([
                fmt_rate(p.r_a),
                fmt_rate(p.r_b),
                opt(p.bound),
                p.feasible.to_string(),
                opt(p.case_s1),
                opt(p.case_s2),
                opt(p.beta_ratio),
                (self.best == Some(i)).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt_rate(v: f64) -> String {
    // Grid values are k * step; trim the representation noise.
    format!("{}", (v * 1e9).round() / 1e9)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn evaluate_point(
    setup: &SearchSetup,
    table: &RatioTable,
    r_s: f64,
    r_r: f64,
    r_a: f64,
    r_b: f64,
) -> Result<SurfacePoint> {
    let best = table.best(r_a, r_b);
    let mut point = SurfacePoint {
        r_a,
        r_b,
        beta_ratio: best.map(|(t, _)| t),
        feasible: false,
        bound: None,
        case_s1: None,
        case_s2: None,
    };
    if !best.is_some_and(|(_, slack)| slack >= 0.0) {
        return Ok(point);
    }
    // r_a on the grid is at least r_s, so r_0 >= 0 up to rounding.
    let rates = RateAllocation::from_total(r_a.max(r_s), r_s, r_b, r_r)?;
    if relay_slack(&rates, &setup.channel, &setup.model).is_some_and(|s| s < 0.0) {
        return Ok(point);
    }
    let phase2 = rates.phase2_random_rate(setup.model.ray_rate);
    if phase2 < 0.0 {
        return Ok(point);
    }
    let thresholds = Thresholds::from_rates(rates.r_0(), r_b, phase2)?;
    let outage = outage_from_thresholds(&thresholds, &setup.fading, &setup.eval)?;
    point.feasible = true;
    point.bound = Some(outage.bound);
    point.case_s1 = Some(outage.case_s1);
    point.case_s2 = Some(outage.case_s2);
    Ok(point)
}

/// Smallest outage bound over the feasible grid points. Ties go to the
/// smaller `r_a`, then the smaller `r_b`.
///
/// A channel that decodes nothing at Ray (zero SNR on both links) yields an
/// empty result before the secret rate is checked.
pub fn minimize_outage(setup: &SearchSetup, r_s: f64, r_r: f64) -> Result<OptimizationResult> {
    let table = RatioTable::new(&setup.channel, &setup.grid.betas, setup.model.mn_form)?;
    if !table.has_bounds() {
        return Ok(OptimizationResult {
            r_s,
            r_r,
            best: None,
            surface: Vec::new(),
        });
    }
    let limit = ray_secrecy_bound(&setup.channel);
    if !(r_s >= 0.0) || r_s > limit {
        return Err(Error::Infeasible(format!(
            "no secret rate achievable: r_s = {r_s} exceeds the Ray-secrecy bound {limit:.6}"
        )));
    }
    if !(r_r >= 0.0 && r_r.is_finite()) {
        return Err(Error::NegativeRate { key: "r_r".into(), value: r_r });
    }
    let (ras, rbs) = setup.grid.axes(r_s)?;
    let pairs: Vec<(f64, f64)> = ras.iter().flat_map(|&a| rbs.iter().map(move |&b| (a, b))).collect();
    let surface = pairs
        .par_iter()
        .map(|&(r_a, r_b)| evaluate_point(setup, &table, r_s, r_r, r_a, r_b))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in surface.iter().enumerate() {
        if let Some(b) = p.bound {
            if best.is_none_or(|(_, v)| b < v) {
                best = Some((i, b));
            }
        }
    }
    Ok(OptimizationResult {
        r_s,
        r_r,
        best: best.map(|(i, _)| i),
        surface,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub r_s: f64,
    pub r_r: f64,
    pub r_a: Option<f64>,
    pub r_b: Option<f64>,
    pub bound: Option<f64>,
    pub case_s1: Option<u8>,
    pub case_s2: Option<u8>,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.bound.is_some()
    }
}

/// Minimized bound for every `(r_s, r_r)`, `r_r` outermost.
pub fn sweep(setup: &SearchSetup, r_s: &GridAxis, r_r: &[f64]) -> Result<Vec<SweepRow>> {
    let rs_points = r_s.points();
    if rs_points.is_empty() || r_r.is_empty() {
        return Err(Error::InvalidInput("sweep ranges must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(rs_points.len() * r_r.len());
    for &rr in r_r {
        for &rs in &rs_points {
            let result = minimize_outage(setup, rs, rr)?;
            let best = result.best_point();
            rows.push(SweepRow {
                r_s: rs,
                r_r: rr,
                r_a: best.map(|p| p.r_a),
                r_b: best.map(|p| p.r_b),
                bound: best.and_then(|p| p.bound),
                case_s1: best.and_then(|p| p.case_s1),
                case_s2: best.and_then(|p| p.case_s2),
            });
        }
    }
    Ok(rows)
}

/// Columns `r_s, r_r, r_a, r_b, bound, feasible, case_s1, case_s2`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r_s", "r_r", "r_a", "r_b", "bound", "feasible", "case_s1", "case_s2"])?;
    for r in rows {
        w.write_record([
            fmt_rate(r.r_s),
            fmt_rate(r.r_r),
            r.r_a.map(fmt_rate).unwrap_or_default(),
            r.r_b.map(fmt_rate).unwrap_or_default(),
            opt(r.bound),
            r.feasible().to_string(),
            opt(r.case_s1),
            opt(r.case_s2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::check_decodability;
    use crate::scenario::LatticeScaling;

    fn setup(model: ModelOptions, step: f64) -> SearchSetup {
        SearchSetup {
            channel: LegitimateChannel::from_db(20.0, 10.0).unwrap(),
            fading: EveFadingParams::new(1.0, 2.0, 1.0).unwrap(),
            model,
            grid: GridSpec {
                step,
                r_a_max: 8.0,
                r_b_max: 4.0,
                ..GridSpec::default()
            },
            eval: EvalOptions::default(),
        }
    }

    #[test]
    fn secret_rate_above_bound_is_rejected() {
        let s = setup(ModelOptions::figure_reproduction(), 0.25);
        assert!(matches!(minimize_outage(&s, 3.3, 7.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_snr_gives_empty_region() {
        let mut s = setup(ModelOptions::figure_reproduction(), 0.5);
        s.channel = LegitimateChannel::new(0.0, 0.0).unwrap();
        let r = minimize_outage(&s, 0.1, 7.0).unwrap();
        assert!(r.is_empty_region());
        assert_eq!(r.best_bound(), None);
    }

    #[test]
    fn feasible_points_recheck_and_argmin_is_minimal() {
        let s = setup(ModelOptions::figure_reproduction(), 0.25);
        let r = minimize_outage(&s, 0.1, 7.0).unwrap();
        let best = r.best_bound().unwrap();
        for p in r.feasible() {
            let rates = RateAllocation::from_total(p.r_a, 0.1, p.r_b, 7.0).unwrap();
            let scaling = LatticeScaling::unit_with_ratio(p.beta_ratio.unwrap()).unwrap();
            assert!(check_decodability(&rates, &scaling, &s.channel, &s.model).is_feasible(), "{p:?}");
            assert!(best <= p.bound.unwrap());
        }
        let mut buf = Vec::new();
        r.write_surface_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r_a,r_b,bound,feasible,case_s1,case_s2,beta_ratio,argmin\n"));
        assert_eq!(text.matches(",true\n").count(), 1);
    }

    #[test]
    fn single_point_sweep_matches_minimize() {
        let s = setup(ModelOptions::figure_reproduction(), 0.25);
        let rows = sweep(&s, &GridAxis::new(0.5, 0.5, 0.1).unwrap(), &[6.0]).unwrap();
        assert_eq!(rows.len(), 1);
        let direct = minimize_outage(&s, 0.5, 6.0).unwrap();
        assert_eq!(rows[0].bound, direct.best_bound());
    }
}
