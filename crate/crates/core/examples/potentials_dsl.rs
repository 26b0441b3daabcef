//! Parsing potential families from the configuration DSL.

use skew_ifs::potentials::PotentialFamily;

fn main() -> skew_ifs::Result<()> {
    // tent written by hand, plus a smooth bump: x(1 - x)
    let family = PotentialFamily::parse(
        "quad; piecewise [0, 0.5] 0 2 [0.5, 1] 2 -2; piecewise [0, 1] 0 1 -1",
    )?;
    for (c, m) in family.members().iter().enumerate() {
        println!(
            "A_{c} = {m}\n    sup {:.4}  lip {:.4}  A(0.3) = {:.6}",
            family.sup_norm().per_member[c],
            family.lipschitz().per_member[c],
            family.eval_f64(c, 0.3)?
        );
    }
    let (best, v) = family.best(0.3);
    println!("best member at 0.3: A_{best} = {v:.6}");

    for bad in [
        "quad; sine",
        "piecewise [0, 1] 0 1",
        "piecewise [0, 0.5] 0 [0.5, 1] 1 -1",
        "piecewise [0, 0.6] 0 1 [0.5, 1] 0 1",
    ] {
        match PotentialFamily::parse(bad) {
            Err(e) => println!("{bad:?}\n    {e}"),
            Ok(_) => println!("{bad:?} unexpectedly parsed"),
        }
    }
    Ok(())
}
