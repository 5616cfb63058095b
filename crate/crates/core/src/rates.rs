//! Decodability at Ray, the forwarding constraint, the Ray-secrecy bound and
//! the achievable `(r_a, r_b)` region.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{LatticeScaling, LegitimateChannel, MnForm, ModelOptions, RateAllocation, RelayForm};

/// Effective noise at Ray for decoding `a1 S^A + a2 V^B`.
pub fn compute_mn(scaling: &LatticeScaling, channel: &LegitimateChannel, form: MnForm) -> f64 {
    let (da, db) = (channel.delta_a, channel.delta_b);
    let sa = scaling.a1 as f64 * scaling.beta_a;
    let sb = scaling.a2 as f64 * scaling.beta_b;
    let (self_a, self_b) = match form {
        MnForm::AsPrinted => (da * da, db),
        MnForm::SymmetrizedSquare => (da * da, db * db),
        MnForm::Linear => (da, db),
    };
    let mismatch = sa - sb;
    (da * db * mismatch * mismatch + sa * sa * self_a + sb * sb * self_b) / (da + db + 1.0)
}

/// Upper bounds on `(r_a, r_b)` for decoding the combination at Ray, or
/// `None` when the effective noise vanishes.
pub fn decodability_bounds(
    scaling: &LatticeScaling,
    channel: &LegitimateChannel,
    form: MnForm,
) -> Option<(f64, f64)> {
    let mn = compute_mn(scaling, channel, form);
    if mn <= 0.0 || !mn.is_finite() {
        return None;
    }
    let bound_a = (scaling.beta_a * scaling.beta_a * channel.delta_a / mn).log2();
    let bound_b = (scaling.beta_b * scaling.beta_b * channel.delta_b / mn).log2();
    Some((bound_a, bound_b))
}

/// Largest secret rate that keeps Ray ignorant of the message. May be negative.
pub fn ray_secrecy_bound(channel: &LegitimateChannel) -> f64 {
    let (da, db) = (channel.delta_a, channel.delta_b);
    // (1+dA+dB) / (sqrt((1+dA)(1+dB)) - sqrt(dA dB))^2 rewritten without the
    // subtraction, which cancels badly at high SNR.
    let root = ((1.0 + da) * (1.0 + db)).sqrt() + (da * db).sqrt();
    (root * root / (1.0 + da + db)).log2() - 2.0
}

/// Secrecy-optimal `beta_a / beta_b` (with `a1 = a2 = 1`).
pub fn optimal_beta_ratio(channel: &LegitimateChannel) -> Result<f64> {
    let (da, db) = (channel.delta_a, channel.delta_b);
    if da <= 0.0 || db <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "ratio undefined for zero SNR (delta_a = {da}, delta_b = {db})"
        )));
    }
    Ok((db * (1.0 + da) / (da * (1.0 + db))).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub m_n: f64,
    /// `m_n == 0`: the decodability logs are undefined.
    pub degenerate: bool,
    pub alice_ok: bool,
    pub bob_ok: bool,
    pub slack_alice: Option<f64>,
    pub slack_bob: Option<f64>,
    pub relay_forward_ok: bool,
    /// `None` when the forwarding constraint is disabled.
    pub slack_relay: Option<f64>,
    pub ray_secrecy_ok: bool,
    pub slack_secrecy: f64,
    /// Ray's random binning rate is non-negative.
    pub phase2_rate_ok: bool,
    pub warnings: Vec<String>,
}

impl FeasibilityReport {
    pub fn decodable_at_ray(&self) -> (bool, bool) {
        (self.alice_ok, self.bob_ok)
    }

    pub fn is_feasible(&self) -> bool {
        !self.degenerate
            && self.alice_ok
            && self.bob_ok
            && self.relay_forward_ok
            && self.ray_secrecy_ok
            && self.phase2_rate_ok
    }
}

/// Forwarding-constraint slack, `None` when the constraint is disabled.
pub fn relay_slack(
    rates: &RateAllocation,
    channel: &LegitimateChannel,
    model: &ModelOptions,
) -> Option<f64> {
    let db = channel.delta_b;
    let capacity = match model.relay_form {
        RelayForm::AsPrinted => (1.0 + db * db).log2(),
        RelayForm::Linear => (1.0 + db).log2(),
        RelayForm::Disabled => return None,
    };
    Some(capacity - rates.ray_codeword_rate(model.ray_rate))
}

pub fn check_decodability(
    rates: &RateAllocation,
    scaling: &LatticeScaling,
    channel: &LegitimateChannel,
    model: &ModelOptions,
) -> FeasibilityReport {
    let m_n = compute_mn(scaling, channel, model.mn_form);
    let bounds = decodability_bounds(scaling, channel, model.mn_form);
    let slack_alice = bounds.map(|(a, _)| a - rates.r_a());
    let slack_bob = bounds.map(|(_, b)| b - rates.r_b());
    let slack_relay = relay_slack(rates, channel, model);
    let slack_secrecy = ray_secrecy_bound(channel) - rates.r_s();

    let mut warnings = Vec::new();
    if channel.delta_b < channel.delta_a {
        warnings.push(format!(
            "Ray-Bob rate log2(1+{}) is below the Alice-Ray rate log2(1+{})",
            channel.delta_b, channel.delta_a
        ));
    }

    FeasibilityReport {
        m_n,
        degenerate: bounds.is_none(),
        alice_ok: slack_alice.is_some_and(|s| s >= 0.0),
        bob_ok: slack_bob.is_some_and(|s| s >= 0.0),
        slack_alice,
        slack_bob,
        relay_forward_ok: slack_relay.is_none_or(|s| s >= 0.0),
        slack_relay,
        ray_secrecy_ok: slack_secrecy >= 0.0,
        slack_secrecy,
        phase2_rate_ok: rates.phase2_random_rate(model.ray_rate) >= 0.0,
        warnings,
    }
}

/// One axis of a rate grid: the multiples of `step` lying in `[lo, hi]`.
///
/// Points are `k * step` for integer `k`, so two axes with the same step
/// share their points exactly wherever their ranges overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput(format!("grid step must be > 0, got {step}")));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidInput(format!("empty grid range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let eps = 1e-9;
        let first = (self.lo / self.step - eps).ceil() as i64;
        let last = (self.hi / self.step + eps).floor() as i64;
        (first..=last).map(|k| k as f64 * self.step).collect()
    }
}

/// Logarithmically spaced `beta_a / beta_b` candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for BetaGrid {
    fn default() -> Self {
        Self {
            lo: 0.1,
            hi: 10.0,
            points: 201,
        }
    }
}

impl BetaGrid {
    pub fn ratios(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.lo > 0.0 && self.hi >= self.lo && self.hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "invalid beta grid [{}, {}] with {} points",
                self.lo, self.hi, self.points
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let (l0, l1) = (self.lo.ln(), self.hi.ln());
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| (l0 + (l1 - l0) * i as f64 / n).exp())
            .collect())
    }
}

/// Decodability bounds at each candidate ratio, computed once per channel.
#[derive(Debug, Clone)]
pub struct RatioTable {
    entries: Vec<(f64, Option<(f64, f64)>)>,
}

impl RatioTable {
    pub fn new(channel: &LegitimateChannel, betas: &BetaGrid, form: MnForm) -> Result<Self> {
        let entries = betas
            .ratios()?
            .into_iter()
            .map(|t| {
                let scaling = LatticeScaling::unit_with_ratio(t).expect("grid ratios are positive");
                (t, decodability_bounds(&scaling, channel, form))
            })
            .collect();
        Ok(Self { entries })
    }

    /// `false` when the effective noise vanishes at every ratio (zero SNR).
    pub fn has_bounds(&self) -> bool {
        self.entries.iter().any(|(_, b)| b.is_some())
    }

    /// Ratio maximizing the smaller decodability slack at `(r_a, r_b)`,
    /// with that slack. Ties keep the smallest ratio.
    pub fn best(&self, r_a: f64, r_b: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for &(t, bounds) in &self.entries {
            let Some((ba, bb)) = bounds else { continue };
            let slack = (ba - r_a).min(bb - r_b);
            if best.is_none_or(|(_, s)| slack > s) {
                best = Some((t, slack));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    pub r_a: f64,
    pub r_b: f64,
    /// Ratio maximizing the smaller decodability slack; `None` when every
    /// ratio is degenerate.
    pub beta_ratio: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRegion {
    pub step_a: f64,
    pub step_b: f64,
    /// Every grid point, row-major in `r_a` then `r_b`.
    pub points: Vec<RegionPoint>,
}

impl RateRegion {
    pub fn feasible(&self) -> impl Iterator<Item = &RegionPoint> {
        self.points.iter().filter(|p| p.feasible)
    }

    pub fn is_empty(&self) -> bool {
        self.feasible().next().is_none()
    }

    /// CSV with columns `r_a,r_b,beta_ratio,feasible`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r_a", "r_b", "beta_ratio", "feasible"])?;
        for p in &self.points {
            w.write_record([
                p.r_a.to_string(),
                p.r_b.to_string(),
                p.beta_ratio.map(|t| t.to_string()).unwrap_or_default(),
                u8::from(p.feasible).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGrid {
    pub r_a: GridAxis,
    pub r_b: GridAxis,
}

impl RateGrid {
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        Ok(Self {
            r_a: GridAxis::new(lo, hi, step)?,
            r_b: GridAxis::new(lo, hi, step)?,
        })
    }
}

/// Grid points `(r_a, r_b)` decodable at Ray for some ratio on `betas`
/// (with `a1 = a2 = 1`, `beta_b = 1`).
pub fn scan_rate_region(
    channel: &LegitimateChannel,
    grid: &RateGrid,
    betas: &BetaGrid,
    form: MnForm,
) -> Result<RateRegion> {
    let table = RatioTable::new(channel, betas, form)?;
    let ras = grid.r_a.points();
    let rbs = grid.r_b.points();
    if ras.is_empty() || rbs.is_empty() {
        return Err(Error::InvalidInput("rate grid has no points".into()));
    }
    let points = ras
        .par_iter()
        .flat_map_iter(|&r_a| {
            let table = &table;
            rbs.iter().map(move |&r_b| {
                let best = table.best(r_a, r_b);
                RegionPoint {
                    r_a,
                    r_b,
                    beta_ratio: best.map(|(t, _)| t),
                    feasible: best.is_some_and(|(_, s)| s >= 0.0),
                }
            })
        })
        .collect();
    Ok(RateRegion {
        step_a: grid.r_a.step,
        step_b: grid.r_b.step,
        points,
    })
}
