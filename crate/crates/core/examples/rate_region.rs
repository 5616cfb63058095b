//! Achievable `(r_a, r_b)` region at Ray for the published channel, under
//! each effective-noise form.

use scf_secrecy::rates::{optimal_beta_ratio, ray_secrecy_bound, scan_rate_region, BetaGrid, RateGrid};
use scf_secrecy::scenario::{LegitimateChannel, MnForm};

fn main() -> scf_secrecy::Result<()> {
    let channel = LegitimateChannel::from_db(20.0, 10.0)?;
    println!("Ray-secrecy bound: {:.4} bit/s/Hz", ray_secrecy_bound(&channel));
    println!("secrecy-optimal beta ratio: {:.4}", optimal_beta_ratio(&channel)?);

    let grid = RateGrid::uniform(0.0, 8.0, 0.05)?;
    for form in [MnForm::AsPrinted, MnForm::SymmetrizedSquare, MnForm::Linear] {
        let region = scan_rate_region(&channel, &grid, &BetaGrid::default(), form)?;
        let max_a = region.feasible().map(|p| p.r_a).fold(f64::NAN, f64::max);
        let max_b = region.feasible().map(|p| p.r_b).fold(f64::NAN, f64::max);
        println!(
            "{form:?}: {} achievable points, max r_a {max_a:.2}, max r_b {max_b:.2}",
            region.feasible().count()
        );
    }

    let region = scan_rate_region(&channel, &grid, &BetaGrid::default(), MnForm::Linear)?;
    let path = std::env::temp_dir().join("rate_region.csv");
    region.write_csv(std::fs::File::create(&path)?)?;
    println!("linear-form region written to {}", path.display());
    Ok(())
}
