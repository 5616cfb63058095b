//! Runs the closed form, quadrature and Monte Carlo against each other on a
//! seeded library of random scenarios and prints one line per scenario.
//!
//! Usage: `cargo run --release --example oracle_triangle [count] [seed]`

use scf_secrecy::validation::{scenario_library, validate_library, ValidationConfig};

fn main() -> scf_secrecy::Result<()> {
    let mut args = std::env::args().skip(1);
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let cfg = ValidationConfig {
        seed: args.next().and_then(|s| s.parse().ok()).unwrap_or(ValidationConfig::default().seed),
        ..ValidationConfig::default()
    };
    let library = scenario_library(cfg.seed, count);
    let report = validate_library(&library, &cfg)?;
    for s in &report.scenarios {
        let worst = s
            .terms
            .iter()
            .map(|t| (t.closed_form - t.quadrature).abs())
            .fold(0.0, f64::max);
        println!(
            "#{:<2} cases {}/{} terms {} max|cf-quad| {:.1e} event cf {:.6} mc {:.6} ± {:.1e} {}",
            s.id,
            s.case_s1,
            s.case_s2,
            s.terms.len(),
            worst,
            s.event.closed_form,
            s.event.mc.value,
            s.event.mc.stderr,
            if s.passed() { "ok" } else { "FAIL" }
        );
    }
    println!("errata: {}", report.errata().count());
    println!("all passed: {}", report.passed);
    Ok(())
}
