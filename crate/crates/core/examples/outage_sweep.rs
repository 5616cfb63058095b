//! Minimized outage bound against the secret rate for three jamming rates.

use scf_secrecy::closedform::EvalOptions;
use scf_secrecy::optimize::{sweep, GridSpec, SearchSetup};
use scf_secrecy::rates::GridAxis;
use scf_secrecy::scenario::{EveFadingParams, LegitimateChannel, ModelOptions};

fn main() -> scf_secrecy::Result<()> {
    let setup = SearchSetup {
        channel: LegitimateChannel::from_db(20.0, 10.0)?,
        fading: EveFadingParams::new(1.0, 2.0, 1.0)?,
        model: ModelOptions::figure_reproduction(),
        grid: GridSpec::with_step(0.05),
        eval: EvalOptions::default(),
    };
    let rows = sweep(&setup, &GridAxis::new(0.1, 1.0, 0.1)?, &[6.0, 7.0, 8.0])?;
    println!("{:>5} {:>5} {:>12}", "r_s", "r_r", "bound");
    for r in &rows {
        match r.bound {
            Some(b) => println!("{:>5.1} {:>5.1} {:>12.3e}", r.r_s, r.r_r, b),
            None => println!("{:>5.1} {:>5.1} {:>12}", r.r_s, r.r_r, "infeasible"),
        }
    }
    Ok(())
}
