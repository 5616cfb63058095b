//! Three-way comparison of closed form, quadrature and Monte Carlo on the
//! dispatched terms and on the event probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::closedform::{outage_from_thresholds, within_erratum_tolerance, Authority, Erratum, EvalOptions, Event, ZSpec};
use crate::error::Result;
use crate::events::{derive_thresholds_with, Thresholds};
use crate::oracles::monte_carlo::{mc_events, mc_z_region, McConfig, McEstimate, DEFAULT_SUBSTREAMS};
use crate::scenario::{EveFadingParams, Scenario};

/// Entry of the seeded random scenario library.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LibraryEntry {
    pub id: usize,
    pub r_0: f64,
    pub r_b: f64,
    /// Ray's random binning rate.
    pub r_r: f64,
    pub fading: EveFadingParams,
}

impl LibraryEntry {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds::from_rates(self.r_0, self.r_b, self.r_r).expect("library rates are valid")
    }
}

/// `count` scenarios with `λ ∈ [0.2, 5]³`, `r_0, r_b ∈ [0.1, 4]` and
/// `r_r ∈ [0.5, 8]`, drawn uniformly.
pub fn scenario_library(seed: u64, count: usize) -> Vec<LibraryEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|id| {
            let mut lambda = || rng.gen_range(0.2..=5.0);
            let fading = EveFadingParams::new(lambda(), lambda(), lambda()).expect("positive rates");
            LibraryEntry {
                id,
                r_0: rng.gen_range(0.1..=4.0),
                r_b: rng.gen_range(0.1..=4.0),
                r_r: rng.gen_range(0.5..=8.0),
                fading,
            }
        })
        .collect()
}

/// Stream-independent seed for check `slot` of scenario `id`.
pub fn derive_seed(seed: u64, id: usize, slot: u64) -> u64 {
    // splitmix64 finalizer over a simple combination.
    let mut z = seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ slot.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationConfig {
    pub term_samples: u64,
    pub event_samples: u64,
    pub seed: u64,
    pub substreams: u32,
    /// Monte Carlo agreement is `|x - mc| <= k_sigma * stderr`.
    pub k_sigma: f64,
    pub eval: EvalOptions,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            term_samples: 1_000_000,
            event_samples: 10_000_000,
            seed: 20_240_601,
            substreams: DEFAULT_SUBSTREAMS,
            k_sigma: 3.0,
            eval: EvalOptions::default().with_authority(Authority::Audit),
        }
    }
}

impl ValidationConfig {
    fn mc(&self, n: u64, id: usize, slot: u64) -> McConfig {
        McConfig {
            n,
            seed: derive_seed(self.seed, id, slot),
            substreams: self.substreams,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// Closed form disagrees with quadrature; quadrature agrees with Monte Carlo.
    Erratum,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermCheck {
    pub event: Event,
    pub index: usize,
    pub spec: ZSpec,
    pub printed: bool,
    pub closed_form: f64,
    pub quadrature: f64,
    pub mc: McEstimate,
    pub closed_form_vs_quadrature: bool,
    pub quadrature_vs_mc: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventCheck {
    pub closed_form: f64,
    /// Sum with quadrature values substituted.
    pub strict: f64,
    pub mc: McEstimate,
    pub closed_form_ok: bool,
    pub strict_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisjointnessCheck {
    pub mc: McEstimate,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub id: usize,
    pub fading: EveFadingParams,
    pub thresholds: Thresholds,
    pub case_s1: u8,
    pub case_s2: u8,
    pub terms: Vec<TermCheck>,
    pub event: EventCheck,
    pub disjointness: DisjointnessCheck,
    pub errata: Vec<Erratum>,
}

impl ScenarioReport {
    /// All three estimators agree everywhere.
    pub fn passed(&self) -> bool {
        self.terms.iter().all(|t| t.verdict == Verdict::Pass) && self.event.closed_form_ok && self.disjointness.ok
    }

    /// Agreement once quadrature replaces any closed form listed as an erratum.
    pub fn strict_passed(&self) -> bool {
        self.terms.iter().all(|t| t.verdict != Verdict::Fail) && self.event.strict_ok && self.disjointness.ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub scenarios: Vec<ScenarioReport>,
    pub passed: bool,
    pub strict_passed: bool,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn errata(&self) -> impl Iterator<Item = &Erratum> {
        self.scenarios.iter().flat_map(|s| &s.errata)
    }
}

/// Runs every check on one set of thresholds.
pub fn validate_thresholds(
    id: usize,
    thresholds: &Thresholds,
    fading: &EveFadingParams,
    cfg: &ValidationConfig,
) -> Result<ScenarioReport> {
    let eval = EvalOptions {
        authority: Authority::Audit,
        ..cfg.eval
    };
    let outage = outage_from_thresholds(thresholds, fading, &eval)?;
    let mut terms = Vec::new();
    for (index, (event, term)) in outage
        .s1
        .terms
        .iter()
        .map(|t| (Event::S1, t))
        .chain(outage.s2.terms.iter().map(|t| (Event::S2, t)))
        .enumerate()
    {
        let quadrature = term.quadrature.expect("audit mode computes quadrature");
        let mc = mc_z_region(&term.spec, fading, thresholds.phi, &cfg.mc(cfg.term_samples, id, 1 + index as u64))?;
        let cf_ok = within_erratum_tolerance(term.closed_form, quadrature);
        let mc_ok = mc.agrees_with(quadrature, cfg.k_sigma);
        let verdict = match (cf_ok, mc_ok) {
            (true, true) => Verdict::Pass,
            (false, true) => Verdict::Erratum,
            _ => Verdict::Fail,
        };
        terms.push(TermCheck {
            event,
            index,
            spec: term.spec,
            printed: term.printed,
            closed_form: term.closed_form,
            quadrature,
            mc,
            closed_form_vs_quadrature: cf_ok,
            quadrature_vs_mc: mc_ok,
            verdict,
        });
    }

    let events = mc_events(thresholds, fading, &cfg.mc(cfg.event_samples, id, 0))?;
    let closed_form = outage.p_s1_o2c + outage.p_s2_o2c;
    let strict: f64 = terms.iter().map(|t| t.quadrature).sum();
    let event = EventCheck {
        closed_form,
        strict,
        mc: events.p_union,
        closed_form_ok: events.p_union.agrees_with(closed_form, cfg.k_sigma),
        strict_ok: events.p_union.agrees_with(strict, cfg.k_sigma),
    };
    let both = events.p_s1_and_s2;
    let disjointness = DisjointnessCheck {
        mc: both,
        ok: both.value <= cfg.k_sigma * both.stderr,
    };
    Ok(ScenarioReport {
        id,
        fading: *fading,
        thresholds: *thresholds,
        case_s1: outage.case_s1,
        case_s2: outage.case_s2,
        terms,
        event,
        disjointness,
        errata: outage.errata().copied().collect(),
    })
}

fn assemble(config: ValidationConfig, scenarios: Vec<ScenarioReport>) -> ValidationReport {
    ValidationReport {
        config,
        passed: scenarios.iter().all(ScenarioReport::passed),
        strict_passed: scenarios.iter().all(ScenarioReport::strict_passed),
        scenarios,
    }
}

/// Validates every library entry.
pub fn validate_library(library: &[LibraryEntry], cfg: &ValidationConfig) -> Result<ValidationReport> {
    let scenarios = library
        .iter()
        .map(|e| validate_thresholds(e.id, &e.thresholds(), &e.fading, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(*cfg, scenarios))
}

/// Validates one configured scenario. Rate feasibility is not required.
pub fn validate_scenario(scenario: &Scenario, cfg: &ValidationConfig) -> Result<ValidationReport> {
    let thresholds = derive_thresholds_with(&scenario.rates, scenario.model.ray_rate)?;
    let report = validate_thresholds(0, &thresholds, &scenario.fading, cfg)?;
    Ok(assemble(*cfg, vec![report]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_is_seeded_and_in_range() {
        let a = scenario_library(5, 20);
        assert_eq!(a, scenario_library(5, 20));
        assert_ne!(a, scenario_library(6, 20));
        for e in &a {
            for l in [e.fading.lambda_a, e.fading.lambda_b, e.fading.lambda_r] {
                assert!((0.2..=5.0).contains(&l));
            }
            assert!((0.1..=4.0).contains(&e.r_0) && (0.1..=4.0).contains(&e.r_b));
            assert!((0.5..=8.0).contains(&e.r_r));
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for id in 0..20 {
            for slot in 0..8 {
                assert!(seen.insert(derive_seed(1, id, slot)));
            }
        }
    }

    #[test]
    fn small_validation_passes() {
        let cfg = ValidationConfig {
            term_samples: 200_000,
            event_samples: 400_000,
            ..ValidationConfig::default()
        };
        let lib = scenario_library(11, 3);
        let report = validate_library(&lib, &cfg).unwrap();
        assert!(report.passed, "{}", report.to_json());
        assert_eq!(report, validate_library(&lib, &cfg).unwrap());
    }
}
