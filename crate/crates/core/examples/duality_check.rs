//! The dual functional is minimised at v: psi(v) matches (1 - l) v(z) and
//! perturbing v never lowers it beyond the grid slack.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skew_ifs::bellman::{solve_value, Sign};
use skew_ifs::ergopt::{dual_functional, Trace};
use skew_ifs::potentials::PotentialFamily;
use skew_ifs::verify::smooth_perturbation;

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let lambda = 0.48;
    let v = solve_value(&f, lambda, Sign::Max, 4096, 1e-10)?;
    let (z, vmax) = v.argmax();
    let nu = Trace::Dirac { z };
    let psi = dual_functional(&v.grid, &f, lambda, &nu)?;
    println!(
        "psi(v) = {:.12}, (1 - l) v(z) = {:.12}",
        psi.value,
        (1.0 - lambda) * vmax
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let p = smooth_perturbation(&mut rng, v.n(), 0.5);
        let w = v.grid.zip_with(&p, |a, b| a + b)?;
        let q = dual_functional(&w, &f, lambda, &nu)?;
        println!(
            "psi(v + p) - psi(v) = {:+.6}  (slack {:.1e})",
            q.value - psi.value,
            q.slack
        );
    }
    Ok(())
}
