//! Seeded Monte Carlo over Eve's exponential channel gains.
//!
//! Samples are split into `substreams` partitions. Partition `i` draws from
//! ChaCha8 seeded with `seed` on stream `i`, so the estimate depends only on
//! `(n, seed, substreams)` and not on how many worker threads run it. Counts
//! are reduced as integers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::closedform::{UpperLimit, ZSpec};
use crate::error::{Error, Result};
use crate::events::{self, derive_thresholds_with, Thresholds};
use crate::scenario::{EveFadingParams, Scenario};

pub const DEFAULT_SUBSTREAMS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub n: u64,
    pub seed: u64,
    pub substreams: u32,
}

impl McConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        Self {
            n,
            seed,
            substreams: DEFAULT_SUBSTREAMS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("sample count must be >= 1".into()));
        }
        if self.substreams == 0 {
            return Err(Error::InvalidInput("substream count must be >= 1".into()));
        }
        Ok(())
    }

    fn partition_len(&self, i: u32) -> u64 {
        let k = self.substreams as u64;
        self.n / k + u64::from((i as u64) < self.n % k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    /// `sqrt(value (1 - value) / n)`
    pub stderr: f64,
    pub hits: u64,
    pub n: u64,
    pub seed: u64,
    pub substreams: u32,
}

impl McEstimate {
    fn from_hits(hits: u64, cfg: &McConfig) -> Self {
        let value = hits as f64 / cfg.n as f64;
        Self {
            value,
            stderr: (value * (1.0 - value) / cfg.n as f64).sqrt(),
            hits,
            n: cfg.n,
            seed: cfg.seed,
            substreams: cfg.substreams,
        }
    }

    /// Standard error the estimator would have if `reference` were the true
    /// probability.
    pub fn stderr_at(&self, reference: f64) -> f64 {
        let p = reference.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// `|value - reference| <= k * max(stderr, stderr_at(reference))`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.stderr.max(self.stderr_at(reference))
    }
}

#[inline]
fn exp_sample<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    let u: f64 = rng.gen();
    -(-u).ln_1p() / lambda
}

/// Counts, per partition, how many draws satisfy each of `K` predicates.
fn count_draws<const K: usize, P>(fading: &EveFadingParams, cfg: &McConfig, pred: P) -> [u64; K]
where
    P: Fn(f64, f64, f64) -> [bool; K] + Sync,
{
    (0..cfg.substreams)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let mut counts = [0u64; K];
            for _ in 0..cfg.partition_len(i) {
                let q_a = exp_sample(&mut rng, fading.lambda_a);
                let q_b = exp_sample(&mut rng, fading.lambda_b);
                let q_r = exp_sample(&mut rng, fading.lambda_r);
                for (c, hit) in counts.iter_mut().zip(pred(q_a, q_b, q_r)) {
                    *c += u64::from(hit);
                }
            }
            counts
        })
        .reduce(
            || [0u64; K],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventEstimates {
    pub p_s1_o2c: McEstimate,
    pub p_s2_o2c: McEstimate,
    /// `P[(S1 ∪ S2) ∩ O2^C]`
    pub p_union: McEstimate,
    /// `P[S1 ∩ S2]`, zero up to boundary ties.
    pub p_s1_and_s2: McEstimate,
    /// `1 - p_union`; its standard error equals that of `p_union`.
    pub bound: McEstimate,
}

pub fn mc_events(thresholds: &Thresholds, fading: &EveFadingParams, cfg: &McConfig) -> Result<EventEstimates> {
    cfg.validate()?;
    let t = *thresholds;
    let [s1, s2, union, both] = count_draws(fading, cfg, move |qa, qb, qr| {
        let in1 = events::in_s1(qa, qb, qr, &t);
        let in2 = events::in_s2(qa, qb, qr, &t);
        let o2c = events::in_o2c(qa, qb, qr, &t);
        [in1 && o2c, in2 && o2c, (in1 || in2) && o2c, in1 && in2]
    });
    let p_union = McEstimate::from_hits(union, cfg);
    let bound = McEstimate {
        value: 1.0 - p_union.value,
        hits: cfg.n - union,
        ..p_union
    };
    Ok(EventEstimates {
        p_s1_o2c: McEstimate::from_hits(s1, cfg),
        p_s2_o2c: McEstimate::from_hits(s2, cfg),
        p_union,
        p_s1_and_s2: McEstimate::from_hits(both, cfg),
        bound,
    })
}

/// Monte Carlo estimates of the event probabilities behind the outage bound.
pub fn mc_estimate(scenario: &Scenario, n: u64, seed: u64) -> Result<EventEstimates> {
    mc_estimate_with(scenario, &McConfig::new(n, seed))
}

pub fn mc_estimate_with(scenario: &Scenario, cfg: &McConfig) -> Result<EventEstimates> {
    let thresholds = derive_thresholds_with(&scenario.rates, scenario.model.ray_rate)?;
    mc_events(&thresholds, &scenario.fading, cfg)
}

/// Probability that a draw lands in the region of `spec`, with the `q_a`
/// lower limit floored at zero.
pub fn mc_z_region(spec: &ZSpec, fading: &EveFadingParams, phi: f64, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let b_max = match spec.b {
        UpperLimit::Finite(b) => {
            if b == spec.a {
                return Ok(McEstimate::from_hits(0, cfg));
            }
            b
        }
        UpperLimit::Infinity => f64::INFINITY,
    };
    if spec.e != 0.0 && !(phi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "a q_a lower limit depending on q_r needs phi > 0, got {phi}"
        )));
    }
    let s = *spec;
    let [hits] = count_draws(fading, cfg, move |qa, qb, qr| {
        let in_r = qr >= s.a && qr <= b_max;
        let in_b = qb >= s.d * qr + s.d_prime && qb <= s.c * qr + s.c_prime;
        let lo = if s.e == 0.0 { 0.0 } else { (s.e * (qr / phi - 1.0 - qb)).max(0.0) };
        let in_a = qa >= lo && qa <= s.f * qr + s.f - qb;
        [in_r && in_b && in_a]
    });
    Ok(McEstimate::from_hits(hits, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{LegitimateChannel, ModelOptions, RateAllocation};

    fn fading() -> EveFadingParams {
        EveFadingParams::new(1.0, 2.0, 0.5).unwrap()
    }

    #[test]
    fn exponential_means() {
        let n = 200_000;
        for lambda in [0.2, 1.0, 5.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mean = (0..n).map(|_| exp_sample(&mut rng, lambda)).sum::<f64>() / n as f64;
            let expected = 1.0 / lambda;
            assert!(((mean - expected) / expected).abs() <= 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let th = Thresholds::from_rates(1.0, 1.0, 2.0).unwrap();
        let cfg = McConfig::new(100_000, 42);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| mc_events(&th, &fading(), &cfg)).unwrap();
        let b = four.install(|| mc_events(&th, &fading(), &cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p_s1_and_s2.hits, 0);
        assert_eq!(a.p_s1_o2c.hits + a.p_s2_o2c.hits, a.p_union.hits);
    }

    #[test]
    fn degenerate_s1_is_exactly_zero() {
        let scenario = Scenario {
            channel: LegitimateChannel::new(1.0, 1.0).unwrap(),
            fading: fading(),
            rates: RateAllocation::new(0.1, 0.0, 0.0, 2.0).unwrap(),
            scaling: None,
            model: ModelOptions::as_printed(),
        };
        let est = mc_estimate(&scenario, 50_000, 1).unwrap();
        assert_eq!(est.p_s1_o2c.value, 0.0);
        assert_eq!(est.p_s1_o2c.stderr, 0.0);
        assert!(mc_estimate(&scenario, 0, 1).is_err());
    }

    #[test]
    fn empty_and_full_regions() {
        let cfg = McConfig::new(20_000, 3);
        let empty = ZSpec::new(1.0, UpperLimit::Finite(1.0), 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let est = mc_z_region(&empty, &fading(), 1.0, &cfg).unwrap();
        assert_eq!((est.value, est.stderr), (0.0, 0.0));

        // q_b in [0, inf), q_a in [0, inf)
        let full = ZSpec::new(0.0, UpperLimit::Infinity, 0.0, 0.0, f64::INFINITY, 0.0, 0.0, f64::INFINITY);
        let est = mc_z_region(&full, &fading(), 1.0, &cfg).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn agreement_uses_reference_stderr_when_estimate_is_zero() {
        let est = McEstimate::from_hits(0, &McConfig::new(1_000_000, 0));
        assert!(est.agrees_with(1e-8, 3.0));
        assert!(!est.agrees_with(1e-4, 3.0));
    }
}
