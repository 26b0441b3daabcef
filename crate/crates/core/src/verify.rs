//! Property suite run by `skew-ifs verify`, sized from a [`RunConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bellman::{
    optimal_sequences, solve_value, BellmanOperator, GridFunction, Sign, ValueFunction,
};
use crate::circle::CirclePoint;
use crate::config::RunConfig;
use crate::ergopt::{
    cycle_oracle, discounted_holonomy_defect, dual_functional, empirical_discounted,
    integrate_payoff, support_check, truncation_for, SupportMode, Trace, DEFAULT_TEST_ORDER,
};
use crate::error::Result;
use crate::potentials::PotentialFamily;
use crate::skew::{
    cocycle_check, conjugacy_step, hutchinson_image, lambda_cloud_chaos, nonattractor_trace,
    ControlWord, PointCloud, SymbolStream,
};

/// Outcome of one property.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check {
            name,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Largest amount by which a cloud leaves `[v- - tol, v+ + tol]`, with `tol`
/// the two grid budgets plus the cloud's own radius. Non-positive means inside.
pub fn sandwich_excess(
    cloud: &PointCloud,
    upper: &ValueFunction,
    lower: &ValueFunction,
) -> (f64, f64) {
    let tol = upper.tol.max(lower.tol) + cloud.error_radius;
    let worst = cloud
        .points
        .iter()
        .map(|&(x, y)| (y - upper.eval(x)).max(lower.eval(x) - y))
        .fold(f64::NEG_INFINITY, f64::max);
    (worst - tol, tol)
}

/// Random grid values in `[-amp, amp]`.
pub fn random_grid(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> GridFunction {
    GridFunction::new((0..n).map(|_| rng.gen_range(-amp..=amp)).collect()).expect("finite values")
}

/// Smooth perturbation `sum_k (p_k cos 2 pi k x + q_k sin 2 pi k x)` scaled to
/// sup-norm `amp`.
pub fn smooth_perturbation(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> GridFunction {
    let coeffs: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let raw = GridFunction::from_fn(n, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &(p, q))| {
                let t = std::f64::consts::TAU * (k + 1) as f64 * x;
                p * t.cos() + q * t.sin()
            })
            .sum()
    });
    let s = raw.sup_norm();
    if s == 0.0 {
        raw
    } else {
        raw.map(|v| v * amp / s)
    }
}

fn bellman_laws(f: &PotentialFamily, lambda: f64, seed: u64) -> Result<Check> {
    const N: usize = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let op = BellmanOperator::new(f, lambda, Sign::Max, N)?;
    let (mut contraction, mut monotone, mut additive) = (0.0f64, true, 0.0f64);
    for _ in 0..100 {
        let g = random_grid(&mut rng, N, 2.0);
        let h = random_grid(&mut rng, N, 2.0);
        let (lg, lh) = (op.apply(&g)?, op.apply(&h)?);
        contraction = contraction.max(lg.distance(&lh)? - lambda * g.distance(&h)?);
        let above = g.zip_with(&h, |a, b| a + b.abs())?;
        let la = op.apply(&above)?;
        monotone &= la.values().iter().zip(lg.values()).all(|(a, b)| a >= b);
        let k = rng.gen_range(-1.0..1.0);
        let shifted = op.apply(&g.map(|v| v + k))?;
        additive = additive.max(shifted.zip_with(&lg, |a, b| a - b - lambda * k)?.sup_norm());
    }
    Ok(Check::new(
        "bellman_laws",
        contraction <= 1e-12 && monotone && additive <= 1e-12,
        format!(
            "contraction excess {contraction:.3e}, monotone {monotone}, additivity {additive:.3e}"
        ),
    ))
}

fn conjugacy_fuzz(f: &PotentialFamily, lambda: f64, seed: u64) -> Result<Check> {
    const DEPTH: usize = 40;
    let bound = 2.0 * lambda.powi(DEPTH as i32) * f.sup_norm().max / (1.0 - lambda) + 1e-10;
    let m = f.len();
    let (mut conj, mut coc) = (0.0f64, 0.0f64);
    for k in 0..100u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(k);
        let x = CirclePoint::lebesgue(s);
        let a = SymbolStream::random(s, 0, 2);
        let c = SymbolStream::random(s, 1, m);
        let b = SymbolStream::random(s, 2, m);
        let step = conjugacy_step(&x, &a, &c, &b, f, lambda, DEPTH)?;
        conj = conj.max(step.discrepancy().unwrap_or(f64::INFINITY));
        let ctrl = ControlWord::new(c, a);
        coc = coc.max(cocycle_check(&x, b.get(0)?, &ctrl, DEPTH, f, lambda)?);
    }
    Ok(Check::new(
        "conjugacy",
        conj <= bound && coc <= bound,
        format!("max discrepancy {conj:.3e}, cocycle {coc:.3e}, bound {bound:.3e}"),
    ))
}

fn nonattractor(f: &PotentialFamily, lambda: f64, seed: u64) -> Result<Check> {
    let third = Some((1, 3));
    let two_thirds = Some((2, 3));
    let mut ok = true;
    for s in 0..4 {
        let c = SymbolStream::random(seed.wrapping_add(s), 3, f.len());
        let trace = nonattractor_trace(1.4, &c, 2000, f, lambda)?;
        ok &= trace.iter().all(|(x, _)| {
            let r = x.exact_ratio();
            r == third || r == two_thirds
        });
    }
    Ok(Check::new(
        "nonattractor",
        ok,
        "x orbit of 1/3 stays on {1/3, 2/3} for 2000 steps".into(),
    ))
}

/// Runs every property at the sizes in `cfg`.
pub fn run_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let f = cfg.family()?;
    let lambda = cfg.lambda;
    let mut out = vec![bellman_laws(&f, lambda, cfg.seed)?];

    let upper = solve_value(&f, lambda, Sign::Max, cfg.grid_n, cfg.tol)?;
    let lower = solve_value(&f, lambda, Sign::Min, cfg.grid_n, cfg.tol)?;
    let cloud = lambda_cloud_chaos(&f, lambda, cfg.n_points, cfg.burn_in, cfg.seed)?;
    let (excess, tol) = sandwich_excess(&cloud, &upper, &lower);
    out.push(Check::new(
        "sandwich",
        excess <= 0.0,
        format!(
            "{} points, worst excess {excess:.3e} over tol {tol:.3e}",
            cloud.len()
        ),
    ));
    let image = hutchinson_image(&cloud, &f, lambda)?;
    let (excess, tol) = sandwich_excess(&image, &upper, &lower);
    out.push(Check::new(
        "self_similarity",
        excess <= 0.0,
        format!(
            "{} image points, worst excess {excess:.3e} over tol {tol:.3e}",
            image.len()
        ),
    ));

    out.push(conjugacy_fuzz(&f, lambda, cfg.seed)?);

    let (z, vmax) = upper.argmax();
    let nu = Trace::Dirac { z };
    let psi = dual_functional(&upper.grid, &f, lambda, &nu)?;
    let target = (1.0 - lambda) * vmax;
    let dual_gap = (psi.value - target).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd0a1);
    let mut worst_drop = f64::NEG_INFINITY;
    for _ in 0..20 {
        let p = smooth_perturbation(&mut rng, upper.n(), 0.5);
        let w = upper.grid.zip_with(&p, |a, b| a + b)?;
        let q = dual_functional(&w, &f, lambda, &nu)?;
        worst_drop = worst_drop.max(psi.value - q.value - q.slack - 2.0 * upper.tol);
    }
    out.push(Check::new(
        "duality",
        dual_gap <= 2.0 * upper.tol && worst_drop <= 0.0,
        format!("|psi - (1-l) v(z)| = {dual_gap:.3e}, tol {:.3e}, worst perturbed drop {worst_drop:.3e}", upper.tol),
    ));

    let meas_tol = 1e-10;
    let steps = truncation_for(&f, lambda, meas_tol);
    let x0 = CirclePoint::from_f64(z);
    let path = optimal_sequences(&upper, &f, &x0, steps)?;
    let mu = empirical_discounted(&x0, &path.control(), lambda, meas_tol, &f)?;
    let tail_mass = match mu.kind {
        crate::ergopt::MeasureKind::Discounted { tail_mass, .. } => tail_mass,
        _ => unreachable!("discounted constructor"),
    };
    let payoff_err = (integrate_payoff(&mu, &f)? - target).abs();
    let payoff_tol = measure_payoff_tolerance(&upper, &f, tail_mass);
    let defect = discounted_holonomy_defect(&mu, &nu, lambda, DEFAULT_TEST_ORDER)?;
    let resid = support_check(&mu, &upper.grid, &f, SupportMode::Discounted(lambda))?;
    let resid_tol = 2.0 * upper.tol + interpolation_slack(&upper, &f);
    out.push(Check::new(
        "discounted_measure",
        payoff_err <= payoff_tol && defect <= 2.0 * tail_mass + 1e-8 && resid <= resid_tol,
        format!(
            "payoff err {payoff_err:.3e} (tol {payoff_tol:.3e}), defect {defect:.3e}, support residual {resid:.3e} (tol {resid_tol:.3e})"
        ),
    ));

    let coarse = solve_value(&f, lambda, Sign::Max, cfg.grid_n / 2, cfg.tol)?;
    let diff = (0..4 * cfg.grid_n)
        .map(|j| {
            let x = j as f64 / (4 * cfg.grid_n) as f64;
            (coarse.eval(x) - upper.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    out.push(Check::new(
        "grid_refinement",
        diff <= coarse.tol + upper.tol,
        format!(
            "N/2 vs N differ by {diff:.3e}, budget {:.3e}",
            coarse.tol + upper.tol
        ),
    ));

    let oracle = cycle_oracle(&f, cfg.oracle_len)?;
    let top = (1.0 - lambda) * (vmax + upper.tol);
    out.push(Check::new(
        "oracle_bracket",
        oracle.value <= top,
        format!(
            "oracle {:.12} <= (1-l)(max v + tol) = {top:.12}",
            oracle.value
        ),
    ));

    out.push(nonattractor(&f, lambda, cfg.seed)?);
    Ok(out)
}

/// Budget for `|int A dmu - (1 - lambda) max v|` along a greedy path from the
/// grid maximiser: the grid error of `v(z)`, the greedy loss `2 lambda tol`
/// per unit of discounted time, and the truncated, renormalised tail.
pub fn measure_payoff_tolerance(v: &ValueFunction, f: &PotentialFamily, tail_mass: f64) -> f64 {
    let l = v.lambda;
    (1.0 - l) * v.tol + 2.0 * l * v.tol + 2.0 * tail_mass * f.sup_norm().max + 1e-12
}

/// How far the Bellman residual of a grid solution can grow between nodes.
pub fn interpolation_slack(v: &ValueFunction, f: &PotentialFamily) -> f64 {
    let lip_w = v.grid.lipschitz();
    let lip_h = v.lambda * lip_w / 2.0 + lip_w + f.lipschitz().max / 2.0;
    lip_h / (2.0 * v.n() as f64)
}
