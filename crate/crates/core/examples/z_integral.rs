//! One region integral by closed form, quadrature and Monte Carlo, plus the
//! branch taken when an exponent coefficient vanishes.

use scf_secrecy::closedform::{z_evaluate, UpperLimit, ZSpec};
use scf_secrecy::oracles::monte_carlo::{mc_z_region, McConfig};
use scf_secrecy::oracles::quadrature::{z_quadrature, DEFAULT_TOL};
use scf_secrecy::scenario::EveFadingParams;

fn show(label: &str, spec: &ZSpec, fading: &EveFadingParams, phi: f64) -> scf_secrecy::Result<()> {
    let z = z_evaluate(spec, fading, phi)?;
    let q = z_quadrature(spec, fading, phi, DEFAULT_TOL)?;
    let mc = mc_z_region(spec, fading, phi, &McConfig::new(1_000_000, 7))?;
    println!("{label}: {spec}");
    println!("  closed form {:.12} (branches {:?}/{:?})", z.value, z.t2_branch, z.t1_branch);
    println!("  quadrature  {q:.12}");
    println!("  monte carlo {:.6} ± {:.1e}", mc.value, mc.stderr);
    Ok(())
}

fn main() -> scf_secrecy::Result<()> {
    let spec = ZSpec::from_table_args(0.0, UpperLimit::Infinity, 1.0, 1.0, 0.5, 0.5, 0.0, 1.0);
    show("generic", &spec, &EveFadingParams::new(1.0, 2.0, 1.0)?, 1.0)?;

    // λA = λB sends the upper-end half through the limiting branch.
    let spec = ZSpec::from_table_args(0.3, UpperLimit::Finite(4.0), 2.0, 1.0, 0.5, 0.2, 0.0, 3.0);
    show("equal rates", &spec, &EveFadingParams::new(1.5, 1.5, 0.7)?, 0.8)?;
    Ok(())
}
