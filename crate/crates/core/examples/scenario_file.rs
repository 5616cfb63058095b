//! Loads a scenario document, checks its rates and evaluates the outage
//! bound with the per-term breakdown.
//!
//! Usage: `cargo run --example scenario_file [path]` (defaults to the bundled
//! figure configuration).

use scf_secrecy::closedform::{outage_bound, Authority, EvalOptions};
use scf_secrecy::rates::check_decodability;
use scf_secrecy::scenario::Scenario;

fn main() -> scf_secrecy::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig1.json").to_string());
    let scenario = Scenario::from_path(&path)?;
    let scaling = scenario.effective_scaling()?;
    let report = check_decodability(&scenario.rates, &scaling, &scenario.channel, &scenario.model);
    println!("beta ratio {:.4}, M_N {:.4}, feasible {}", scaling.ratio(), report.m_n, report.is_feasible());
    for w in &report.warnings {
        println!("warning: {w}");
    }

    let opts = EvalOptions::default().with_authority(Authority::Audit);
    let result = outage_bound(&scenario, &opts)?;
    println!("cases {}/{}; bound {:.4e}", result.case_s1, result.case_s2, result.bound);
    for t in result.terms() {
        println!(
            "  {}  closed {:.6e}  quadrature {:.6e}{}",
            t.spec,
            t.closed_form,
            t.quadrature.unwrap_or(f64::NAN),
            if t.printed { "" } else { "  (tail term)" }
        );
    }
    println!("errata: {}", result.errata().count());
    Ok(())
}
