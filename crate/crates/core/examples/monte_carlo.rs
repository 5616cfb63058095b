//! Monte Carlo estimates of the event probabilities next to the closed
//! forms, and the same estimate under one and two worker threads.

use scf_secrecy::closedform::{outage_from_thresholds, EvalOptions};
use scf_secrecy::events::Thresholds;
use scf_secrecy::oracles::monte_carlo::{mc_events, McConfig};
use scf_secrecy::scenario::EveFadingParams;

fn main() -> scf_secrecy::Result<()> {
    let fading = EveFadingParams::new(1.0, 2.0, 1.0)?;
    let thresholds = Thresholds::from_rates(2.0, 1.0, 3.0)?;
    let cfg = McConfig::new(10_000_000, 1);

    let closed = outage_from_thresholds(&thresholds, &fading, &EvalOptions::default())?;
    let mc = mc_events(&thresholds, &fading, &cfg)?;
    println!("P[S1,O2c]  closed {:.6}  mc {:.6} ± {:.1e}", closed.p_s1_o2c, mc.p_s1_o2c.value, mc.p_s1_o2c.stderr);
    println!("P[S2,O2c]  closed {:.6}  mc {:.6} ± {:.1e}", closed.p_s2_o2c, mc.p_s2_o2c.value, mc.p_s2_o2c.stderr);
    println!("bound      closed {:.6}  mc {:.6} ± {:.1e}", closed.bound, mc.bound.value, mc.bound.stderr);
    println!("P[S1,S2]   mc {:.1e}", mc.p_s1_and_s2.value);

    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool");
    let one = pool(1).install(|| mc_events(&thresholds, &fading, &cfg))?;
    let two = pool(2).install(|| mc_events(&thresholds, &fading, &cfg))?;
    println!("identical across thread counts: {}", one == two);
    Ok(())
}
