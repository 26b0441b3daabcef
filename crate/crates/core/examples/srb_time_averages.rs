//! Averages over the random SRB measure against time averages along typical
//! orbits.

use skew_ifs::potentials::PotentialFamily;
use skew_ifs::srb::{birkhoff_experiment, sample_srb, Observable};

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let lambda = 0.48;
    for g in [Observable::Y, Observable::PotentialAtPast] {
        let e = sample_srb(&f, lambda, &g, 100_000, 1e-10, 11)?;
        println!("{:<18} {:.6} +- {:.1e}", e.statistic, e.mean, e.std_error);
    }
    let y2 = Observable::function("y^2", 2.0 * 2.0 / (1.0 - lambda), |_, y, _| y * y);
    let e = sample_srb(&f, lambda, &y2, 100_000, 1e-10, 11)?;
    println!("{:<18} {:.6} +- {:.1e}", e.statistic, e.mean, e.std_error);

    let report = birkhoff_experiment(&f, lambda, 100_000, 8, 100_000, 5)?;
    println!("reference (1 - l) E[y] = {:.6}", report.reference);
    for t in &report.trials {
        println!(
            "  orbit average {:.6} (band {:.1e})",
            t.average,
            report.band(t)
        );
    }
    println!("outside the band: {}", report.outliers());
    Ok(())
}
