//! Exact binary arithmetic on the circle: doubling, inverse branches and
//! periodic points that floats cannot hold.

use skew_ifs::circle::{distance, CirclePoint};

fn main() {
    // 1/3 = 0.010101... is 2-periodic under doubling; in f64 it decays to 0.
    let mut exact = CirclePoint::from_ratio(1, 3);
    let mut float = 1.0 / 3.0f64;
    for step in 1..=60 {
        exact = exact.double();
        float = (2.0 * float).fract();
        if step % 10 == 0 {
            println!(
                "step {step:>2}: exact {:?}  float {float:.6}",
                exact.exact_ratio()
            );
        }
    }

    // inverse branches undo doubling
    let x = CirclePoint::from_ratio(2, 7);
    for a in 0..2 {
        let y = x.inverse_branch(a);
        println!(
            "tau_{a}(2/7) = {:?}, doubled back = {:?}",
            y.exact_ratio(),
            y.double().exact_ratio()
        );
    }

    println!("circle distance(0.95, 0.05) = {}", distance(0.95, 0.05));
}
