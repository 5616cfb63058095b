//! Rayleigh-domain thresholds and per-draw event membership.
//!
//! For Eve's squared gains `(q_a, q_b, q_r)`:
//!
//! * `S1 = { q_a + q_b <= mu (1 + q_r), q_b >= nu (1 + q_r) }`
//! * `S2 = { q_a + q_b - mu' q_r <= mu', q_b - nu q_r <= nu }`
//! * `O2^C = { q_r - phi (q_a + q_b) <= phi }` (Eve cannot resolve Ray's message)
//!
//! All inequalities are inclusive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{RateAllocation, RayRateConvention};

/// `2^rate - 1` without cancellation at small rates.
pub fn snr_threshold(rate: f64) -> f64 {
    (rate * std::f64::consts::LN_2).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `2^(r_0 + r_b) - 1`
    pub mu: f64,
    /// `2^r_b - 1`
    pub nu: f64,
    /// `2^r_0 - 1`
    pub mu_prime: f64,
    /// `2^(phase-2 random rate) - 1`
    pub phi: f64,
    /// Last `q_r` with `S1 ∩ O2^C` non-empty; present iff `mu phi < 1`.
    pub gamma: Option<f64>,
    /// Last `q_r` where `O2^C` leaves the `nu` boundary alone; present iff `nu phi < 1`.
    pub delta: Option<f64>,
    /// Last `q_r` with `S2 ∩ O2^C` non-empty; present iff `mu' phi < 1`.
    pub gamma_prime: Option<f64>,
}

fn cutoff(x: f64, phi: f64) -> Option<f64> {
    let p = x * phi;
    (p < 1.0).then(|| phi * (1.0 + x) / (1.0 - p))
}

impl Thresholds {
    /// Thresholds from the first-phase rates and Ray's random binning rate.
    pub fn from_rates(r_0: f64, r_b: f64, phase2_random_rate: f64) -> Result<Self> {
        for (key, v) in [("r_0", r_0), ("r_b", r_b), ("phase-2 random rate", phase2_random_rate)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(key, format!("must be finite and >= 0, got {v}")));
            }
        }
        let mu = snr_threshold(r_0 + r_b);
        let nu = snr_threshold(r_b);
        let mu_prime = snr_threshold(r_0);
        let phi = snr_threshold(phase2_random_rate);
        Ok(Self {
            mu,
            nu,
            mu_prime,
            phi,
            gamma: cutoff(mu, phi),
            delta: cutoff(nu, phi),
            gamma_prime: cutoff(mu_prime, phi),
        })
    }
}

/// Thresholds with `r_r` taken as Ray's random binning rate.
pub fn derive_thresholds(rates: &RateAllocation) -> Thresholds {
    Thresholds::from_rates(rates.r_0(), rates.r_b(), rates.r_r())
        .expect("RateAllocation rates are finite and non-negative")
}

/// Thresholds under an explicit reading of `r_r`. Fails when the resulting
/// random binning rate is negative.
pub fn derive_thresholds_with(
    rates: &RateAllocation,
    convention: RayRateConvention,
) -> Result<Thresholds> {
    let phase2 = rates.phase2_random_rate(convention);
    if phase2 < 0.0 {
        return Err(Error::Infeasible(format!(
            "Ray's random binning rate r_r - r_a = {phase2} is negative"
        )));
    }
    Thresholds::from_rates(rates.r_0(), rates.r_b(), phase2)
}

/// One realization of Eve's squared channel gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveDraw {
    pub q_a: f64,
    pub q_b: f64,
    pub q_r: f64,
}

impl EveDraw {
    pub fn new(q_a: f64, q_b: f64, q_r: f64) -> Result<Self> {
        for (key, v) in [("q_a", q_a), ("q_b", q_b), ("q_r", q_r)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(key, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { q_a, q_b, q_r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawClassification {
    pub in_s1: bool,
    pub in_s2: bool,
    pub in_o2c: bool,
    /// Alice+Bob → Eve MAC capacity with Ray's artificial noise.
    pub c_mac: f64,
    /// Bob → Eve capacity once Alice's codeword is removed.
    pub c_bob_residual: f64,
    /// Ray → Eve capacity under Alice's and Bob's artificial noise.
    pub c_ray: f64,
}

#[inline]
pub(crate) fn in_s1(q_a: f64, q_b: f64, q_r: f64, t: &Thresholds) -> bool {
    q_a + q_b <= t.mu * (1.0 + q_r) && q_b >= t.nu * (1.0 + q_r)
}

#[inline]
pub(crate) fn in_s2(q_a: f64, q_b: f64, q_r: f64, t: &Thresholds) -> bool {
    q_a + q_b - t.mu_prime * q_r <= t.mu_prime && q_b - t.nu * q_r <= t.nu
}

#[inline]
pub(crate) fn in_o2c(q_a: f64, q_b: f64, q_r: f64, t: &Thresholds) -> bool {
    // No division by phi: at phi = 0 this is q_r <= 0.
    q_r - t.phi * (q_a + q_b) <= t.phi
}

pub fn classify_draw(draw: &EveDraw, thresholds: &Thresholds) -> DrawClassification {
    let EveDraw { q_a, q_b, q_r } = *draw;
    DrawClassification {
        in_s1: in_s1(q_a, q_b, q_r, thresholds),
        in_s2: in_s2(q_a, q_b, q_r, thresholds),
        in_o2c: in_o2c(q_a, q_b, q_r, thresholds),
        c_mac: (1.0 + (q_a + q_b) / (1.0 + q_r)).log2(),
        c_bob_residual: (1.0 + q_b / (1.0 + q_r)).log2(),
        c_ray: (1.0 + q_r / (1.0 + q_a + q_b)).log2(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(r_0: f64, r_b: f64, r_r: f64) -> Thresholds {
        derive_thresholds(&RateAllocation::new(0.0, r_0, r_b, r_r).unwrap())
    }

    #[test]
    fn powers_of_two() {
        let th = t(1.0, 1.0, 1.0);
        assert_eq!((th.mu, th.nu, th.mu_prime, th.phi), (3.0, 1.0, 1.0, 1.0));
        assert_eq!((th.gamma, th.delta, th.gamma_prime), (None, None, None));
    }

    #[test]
    fn half_rates_against_high_precision() {
        let th = t(0.5, 0.5, 0.5);
        let s = 0.414_213_562_373_095_05;
        assert!((th.mu - 1.0).abs() < 1e-15);
        for v in [th.nu, th.mu_prime, th.phi] {
            assert!((v - s).abs() < 1e-15);
        }
        assert!((th.gamma.unwrap() - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((th.delta.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((th.gamma_prime.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn zero_rates() {
        let th = t(0.0, 0.0, 0.0);
        assert_eq!((th.mu, th.nu, th.mu_prime, th.phi), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((th.gamma, th.delta, th.gamma_prime), (Some(0.0), Some(0.0), Some(0.0)));
    }

    #[test]
    fn total_rate_convention() {
        let r = RateAllocation::new(0.1, 2.9, 1.0, 7.0).unwrap();
        let th = derive_thresholds_with(&r, RayRateConvention::TotalRate).unwrap();
        assert!((th.phi - 15.0).abs() < 1e-12);
        let r = RateAllocation::new(0.1, 7.9, 1.0, 7.0).unwrap();
        assert!(derive_thresholds_with(&r, RayRateConvention::TotalRate).is_err());
    }

    #[test]
    fn classification_examples() {
        let th = Thresholds {
            mu: 3.0,
            nu: 1.0,
            mu_prime: 1.0,
            phi: 1.0,
            gamma: None,
            delta: None,
            gamma_prime: None,
        };
        let c = classify_draw(&EveDraw::new(0.5, 2.5, 0.0).unwrap(), &th);
        assert!(c.in_s1 && !c.in_s2 && c.in_o2c);
        assert_eq!(c.c_mac, 2.0);

        let c = classify_draw(&EveDraw::new(0.0, 0.0, 4.0).unwrap(), &th);
        assert_eq!(c.c_mac, 0.0);
        assert!(!c.in_s1);

        let c = classify_draw(&EveDraw::new(5.0, 0.5, 10.0).unwrap(), &t(1.0, 1.0, 1.0));
        assert!(c.in_s2);
        assert!(!c.in_o2c);
        assert!(EveDraw::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_phi_means_no_ray_leak_only_at_zero() {
        let th = t(1.0, 1.0, 0.0);
        assert!(in_o2c(3.0, 3.0, 0.0, &th));
        assert!(!in_o2c(3.0, 3.0, 1e-12, &th));
    }

    #[test]
    fn zero_nu_reduces_s2_to_zero_qb() {
        let th = t(1.0, 0.0, 1.0);
        assert!(in_s2(0.5, 0.0, 2.0, &th));
        assert!(!in_s2(0.5, 1e-9, 2.0, &th));
    }

    proptest! {
        #[test]
        fn s1_s2_split_on_nu_boundary(qa in 0.0f64..20.0, qb in 0.0f64..20.0, qr in 0.0f64..20.0,
                                      r0 in 0.0f64..4.0, rb in 0.0f64..4.0) {
            let th = t(r0, rb, 1.0);
            let c = classify_draw(&EveDraw::new(qa, qb, qr).unwrap(), &th);
            if c.in_s1 { prop_assert!(qb >= th.nu * (1.0 + qr)); }
            if c.in_s2 { prop_assert!(qb - th.nu * qr <= th.nu); }
            if qb != th.nu * (1.0 + qr) && qb - th.nu * qr != th.nu {
                prop_assert!(!(c.in_s1 && c.in_s2));
            }
        }

        #[test]
        fn c_mac_monotone(qa in 0.0f64..20.0, qb in 0.0f64..20.0, qr in 0.0f64..20.0, h in 1e-3f64..1.0) {
            let th = t(1.0, 1.0, 1.0);
            let base = classify_draw(&EveDraw::new(qa, qb, qr).unwrap(), &th).c_mac;
            prop_assert!(classify_draw(&EveDraw::new(qa, qb, qr + h).unwrap(), &th).c_mac <= base);
            prop_assert!(classify_draw(&EveDraw::new(qa + h, qb, qr).unwrap(), &th).c_mac >= base);
            prop_assert!(classify_draw(&EveDraw::new(qa, qb + h, qr).unwrap(), &th).c_mac >= base);
        }

        #[test]
        fn huge_phi_protects_bounded_qr(qa in 0.0f64..50.0, qb in 0.0f64..50.0, qr in 0.0f64..1e5) {
            let th = Thresholds::from_rates(1.0, 1.0, (1e6f64 + 1.0).log2() + 1e-9).unwrap();
            prop_assert!(th.phi >= 1e6);
            prop_assert!(in_o2c(qa, qb, qr, &th));
        }

        #[test]
        fn threshold_invariants(r0 in 0.0f64..8.0, rb in 0.0f64..8.0, rr in 0.0f64..8.0) {
            let th = t(r0, rb, rr);
            prop_assert!(th.mu >= th.mu_prime && th.mu >= th.nu);
            prop_assert_eq!(th.gamma.is_some(), th.mu * th.phi < 1.0);
            prop_assert_eq!(th.delta.is_some(), th.nu * th.phi < 1.0);
            prop_assert_eq!(th.gamma_prime.is_some(), th.mu_prime * th.phi < 1.0);
            for v in [th.gamma, th.delta, th.gamma_prime].into_iter().flatten() {
                prop_assert!(v >= 0.0);
            }
        }
    }
}
