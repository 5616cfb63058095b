use std::collections::BTreeSet;

use scf_secrecy::closedform::{
    outage_bound, outage_from_thresholds, z_value, CaseTable, EvalOptions, UpperLimit, ZSpec,
};
use scf_secrecy::events::Thresholds;
use scf_secrecy::oracles::monte_carlo::mc_estimate;
use scf_secrecy::oracles::z_quadrature;
use scf_secrecy::scenario::{
    EveFadingParams, LegitimateChannel, ModelOptions, RateAllocation, Scenario,
};
use scf_secrecy::validation::{validate_thresholds, ValidationConfig, Verdict};

fn cfg() -> ValidationConfig {
    ValidationConfig {
        term_samples: 200_000,
        event_samples: 2_000_000,
        seed: 77,
        ..ValidationConfig::default()
    }
}

// (r_0, r_b, phase-2 rate, λ) hitting every S1 and S2 case.
const COVERAGE: [(f64, f64, f64, [f64; 3]); 6] = [
    (2.0, 0.1, 3.0, [1.0, 2.0, 1.0]),
    (2.0, 1.0, 2.0, [0.5, 1.0, 2.0]),
    (1.0, 2.0, 1.0, [2.0, 0.7, 1.0]),
    (0.3, 0.2, 0.5, [1.0, 1.0, 1.0]),
    (0.1, 0.5, 0.5, [0.3, 3.0, 0.8]),
    (2.5, 0.1, 0.4, [1.0, 10.0, 1.0]),
];

#[test]
fn every_case_passes_three_way_validation() {
    let mut s1 = BTreeSet::new();
    let mut s2 = BTreeSet::new();
    for (id, (r_0, r_b, rr, l)) in COVERAGE.into_iter().enumerate() {
        let t = Thresholds::from_rates(r_0, r_b, rr).unwrap();
        let fading = EveFadingParams::new(l[0], l[1], l[2]).unwrap();
        let report = validate_thresholds(id, &t, &fading, &cfg()).unwrap();
        assert!(report.passed(), "scenario {id}: {report:#?}");
        assert!(report.terms.iter().all(|t| t.verdict == Verdict::Pass));
        assert!(report.errata.is_empty());
        s1.insert(report.case_s1);
        s2.insert(report.case_s2);
    }
    assert_eq!(s1, BTreeSet::from([1, 2, 3]));
    assert_eq!(s2, BTreeSet::from([1, 2, 3, 4, 5]));
}

#[test]
fn printed_case_lists_miss_probability_mass() {
    let t = Thresholds::from_rates(2.5, 0.1, 0.4).unwrap();
    let fading = EveFadingParams::new(1.0, 10.0, 1.0).unwrap();
    let complete = validate_thresholds(0, &t, &fading, &cfg()).unwrap();
    let printed_cfg = ValidationConfig {
        eval: cfg().eval.with_table(CaseTable::AsPrinted),
        ..cfg()
    };
    let printed = validate_thresholds(0, &t, &fading, &printed_cfg).unwrap();
    assert_eq!(complete.case_s2, 2);
    assert!(complete.event.closed_form_ok);
    assert!(!printed.event.closed_form_ok);
    let missing = complete.event.closed_form - printed.event.closed_form;
    assert!(missing > 0.1, "{missing}");
}

#[test]
fn frozen_region_integral() {
    // Reference from independent 30-digit quadrature.
    let fading = EveFadingParams::new(1.0, 2.0, 1.0).unwrap();
    let z = ZSpec::from_table_args(0.0, UpperLimit::Infinity, 1.0, 1.0, 0.5, 0.5, 0.0, 1.0);
    let v = z_value(&z, &fading, 1.0).unwrap();
    assert!((v - 0.050_547_353_545_848_19).abs() < 1e-14, "{v}");
    let q = z_quadrature(&z, &fading, 1.0, 1e-12).unwrap();
    assert!((v - q).abs() < 1e-12);
}

#[test]
fn strict_and_closed_form_outage_agree() {
    for (r_0, r_b, rr, l) in COVERAGE {
        let t = Thresholds::from_rates(r_0, r_b, rr).unwrap();
        let fading = EveFadingParams::new(l[0], l[1], l[2]).unwrap();
        let cf = outage_from_thresholds(&t, &fading, &EvalOptions::default()).unwrap();
        let strict = outage_from_thresholds(
            &t,
            &fading,
            &EvalOptions::default().with_authority(scf_secrecy::closedform::Authority::Strict),
        )
        .unwrap();
        assert!((cf.unclamped - strict.unclamped).abs() < 1e-9);
    }
}

#[test]
fn fig1_minimum_matches_monte_carlo() {
    let scenario = Scenario {
        channel: LegitimateChannel::from_db(20.0, 10.0).unwrap(),
        fading: EveFadingParams::new(1.0, 2.0, 1.0).unwrap(),
        rates: RateAllocation::from_total(3.6, 0.1, 0.25, 7.0).unwrap(),
        scaling: None,
        model: ModelOptions::figure_reproduction(),
    };
    let cf = outage_bound(&scenario, &EvalOptions::default()).unwrap();
    let mc = mc_estimate(&scenario, 100_000_000, 2024).unwrap();
    assert!(mc.bound.hits > 100);
    assert!(mc.bound.agrees_with(cf.bound, 3.0), "cf {} mc {:?}", cf.bound, mc.bound);
}
