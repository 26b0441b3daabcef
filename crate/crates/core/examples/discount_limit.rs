//! As the discount tends to 1, (1 - l) max v_l decreases onto the critical
//! value, bracketed from below by the best periodic orbit.

use skew_ifs::ergopt::{cycle_oracle, discount_limit_schedule, grid_for_lambda};
use skew_ifs::potentials::PotentialFamily;

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let w = cycle_oracle(&f, 12)?;
    println!(
        "best cycle: value {:.12}, word {:?}, points {:?}/{}",
        w.value, w.word, w.numerators, w.denominator
    );

    let lambdas = [0.9, 0.99, 0.999];
    let grids: Vec<usize> = lambdas
        .iter()
        .map(|&l| grid_for_lambda(4096, l, 1 << 15))
        .collect();
    let rows = discount_limit_schedule(&f, &lambdas, &grids, 1e-7, 12)?;
    println!(
        "{:>7} {:>12} {:>12} {:>10} {:>7}",
        "lambda", "umax", "ulebesgue", "gap", "N"
    );
    for r in rows {
        println!(
            "{:>7} {:>12.9} {:>12.9} {:>10.3e} {:>7}",
            r.lambda, r.umax, r.ulebesgue, r.gap, r.grid_n
        );
    }
    Ok(())
}
