//! The optimal discounted measure: greedy path from the maximiser of v,
//! its payoff, holonomy defect and support residual.

use skew_ifs::bellman::{optimal_sequences, solve_value, Sign};
use skew_ifs::circle::CirclePoint;
use skew_ifs::ergopt::{
    discounted_holonomy_defect, empirical_discounted, integrate_payoff, support_check,
    truncation_for, SupportMode, Trace, DEFAULT_TEST_ORDER,
};
use skew_ifs::potentials::PotentialFamily;

fn main() -> skew_ifs::Result<()> {
    let f = PotentialFamily::quad_tent();
    let lambda = 0.48;
    let v = solve_value(&f, lambda, Sign::Max, 8192, 1e-10)?;
    let (z, vmax) = v.argmax();
    let x0 = CirclePoint::from_f64(z);
    let path = optimal_sequences(&v, &f, &x0, truncation_for(&f, lambda, 1e-12))?;
    println!(
        "argmax z = {z:.6}, first choices c = {:?} a = {:?}",
        &path.c[..8],
        &path.a[..8]
    );

    let mu = empirical_discounted(&x0, &path.control(), lambda, 1e-12, &f)?;
    println!("m_lambda = (1 - l) max v = {:.12}", (1.0 - lambda) * vmax);
    println!(
        "int A dmu              = {:.12}",
        integrate_payoff(&mu, &f)?
    );
    let defect = discounted_holonomy_defect(&mu, &Trace::Dirac { z }, lambda, DEFAULT_TEST_ORDER)?;
    println!("holonomy defect {defect:.3e}");
    let resid = support_check(&mu, &v.grid, &f, SupportMode::Discounted(lambda))?;
    println!("support residual {resid:.3e} (grid tol {:.3e})", v.tol);
    Ok(())
}
