//! Samples the invariant set two ways: a chaos-game orbit and an exhaustive
//! enumeration of truncated series, and compares their vertical extents.

use skew_ifs::potentials::PotentialFamily;
use skew_ifs::skew::{lambda_cloud_chaos, lambda_cloud_enumerate};

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let lambda = 0.48;
    let chaos = lambda_cloud_chaos(&f, lambda, 10_000, 1_000, 7)?;
    let grid = lambda_cloud_enumerate(&f, lambda, 8, 64, 1 << 24)?;

    for (name, cloud) in [("chaos", &chaos), ("enumerated", &grid)] {
        let (lo, hi) = cloud
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(_, y)| {
                (l.min(y), h.max(y))
            });
        println!(
            "{name:>10}: {:>7} points, y in [{lo:.4}, {hi:.4}], radius {:.2e}",
            cloud.len(),
            cloud.error_radius
        );
    }
    Ok(())
}
