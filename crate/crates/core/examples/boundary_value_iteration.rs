//! Upper and lower boundaries of the invariant set by value iteration, with
//! their error budgets and a grid-refinement comparison.

use skew_ifs::bellman::{solve_value, Sign};
use skew_ifs::potentials::PotentialFamily;

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let lambda = 0.48;
    let upper = solve_value(&f, lambda, Sign::Max, 8192, 1e-10)?;
    let lower = solve_value(&f, lambda, Sign::Min, 8192, 1e-10)?;
    println!(
        "sweeps {} / {}, tol {:.3e}",
        upper.iterations, lower.iterations, upper.tol
    );
    for x in [0.0, 0.125, 0.25, 1.0 / 3.0, 0.5, 0.75] {
        println!(
            "x = {x:.4}:  v- = {:.6}  v+ = {:.6}",
            lower.eval(x),
            upper.eval(x)
        );
    }

    let coarse = solve_value(&f, lambda, Sign::Max, 4096, 1e-10)?;
    let diff = (0..16_384)
        .map(|j| {
            let x = j as f64 / 16_384.0;
            (coarse.eval(x) - upper.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    println!(
        "N = 4096 vs 8192: {diff:.3e} (budget {:.3e})",
        coarse.tol + upper.tol
    );
    Ok(())
}
