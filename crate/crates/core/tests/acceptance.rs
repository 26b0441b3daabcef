//! Acceptance suite. Runs every criterion in sequence (so the timings are not
//! disturbed by sibling tests), prints one PASS/FAIL line each and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skew_ifs::bellman::{optimal_sequences, solve_value, BellmanOperator, Sign};
use skew_ifs::circle::CirclePoint;
use skew_ifs::ergopt::{
    cycle_oracle, discount_limit_schedule, discounted_holonomy_defect, dual_functional,
    empirical_discounted, grid_for_lambda, integrate_payoff, support_check, truncation_for,
    MeasureKind, SupportMode, Trace, DEFAULT_TEST_ORDER,
};
use skew_ifs::potentials::PotentialFamily;
use skew_ifs::skew::{
    cocycle_check, conjugacy_step, hutchinson_image, lambda_cloud_chaos, nonattractor_trace,
    ControlWord, SymbolStream,
};
use skew_ifs::srb::{birkhoff_experiment, sample_srb, Observable};
use skew_ifs::verify::{
    interpolation_slack, measure_payoff_tolerance, random_grid, sandwich_excess,
    smooth_perturbation,
};
use skew_ifs::Result;

const LAMBDA: f64 = 0.48;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn closed_forms() -> Result<Outcome> {
    let k = PotentialFamily::constant(1.0);
    let exact = 1.0 / 0.52;
    let upper = solve_value(&k, LAMBDA, Sign::Max, 1024, 1e-13)?;
    let lower = solve_value(&k, LAMBDA, Sign::Min, 1024, 1e-13)?;
    let v_err = upper
        .grid
        .values()
        .iter()
        .chain(lower.grid.values())
        .map(|v| (v - exact).abs())
        .fold(0.0, f64::max);
    let y = sample_srb(&k, LAMBDA, &Observable::Y, 10_000, 1e-15, 1)?;
    let y_err = (y.mean - exact).abs();
    let oracle = cycle_oracle(&k, 8)?.value;
    let width = (1.0 - LAMBDA) * (upper.grid.max() + upper.tol) - oracle;
    outcome(
        v_err <= 1e-9 && y.std_error == 0.0 && y_err <= 1e-12 && (0.0..=1e-9).contains(&width),
        format!(
            "|v - 1/0.52| = {v_err:.1e}, srb mean err {y_err:.1e} with std error {}, bracket width {width:.1e}",
            y.std_error
        ),
    )
}

fn bellman_laws() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let op = BellmanOperator::new(&f, LAMBDA, Sign::Max, 256)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut contraction, mut monotone, mut additive) = (f64::NEG_INFINITY, true, 0.0f64);
    for _ in 0..100 {
        let g = random_grid(&mut rng, 256, 2.0);
        let h = random_grid(&mut rng, 256, 2.0);
        let (lg, lh) = (op.apply(&g)?, op.apply(&h)?);
        contraction = contraction.max(lg.distance(&lh)? - LAMBDA * g.distance(&h)?);

        let up = g.zip_with(&h, |a, b| a + b.abs())?;
        let lup = op.apply(&up)?;
        monotone &= lup.values().iter().zip(lg.values()).all(|(a, b)| a >= b);

        let k = rng.gen_range(-3.0..3.0);
        let shifted = op.apply(&g.map(|v| v + k))?;
        additive = additive.max(shifted.zip_with(&lg, |a, b| a - b - LAMBDA * k)?.sup_norm());
    }
    outcome(
        contraction <= 1e-12 && monotone && additive <= 1e-12,
        format!(
            "contraction excess {contraction:.1e}, monotone {monotone}, additivity {additive:.1e}"
        ),
    )
}

fn example_sandwich(image: bool) -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let upper = solve_value(&f, LAMBDA, Sign::Max, 8192, 1e-10)?;
    let lower = solve_value(&f, LAMBDA, Sign::Min, 8192, 1e-10)?;
    let mut cloud = lambda_cloud_chaos(&f, LAMBDA, 10_000, 1_000, 0)?;
    if image {
        cloud = hutchinson_image(&cloud, &f, LAMBDA)?;
    }
    let (excess, tol) = sandwich_excess(&cloud, &upper, &lower);
    let expected = if image { 2 * 10_000 } else { 10_000 };
    outcome(
        excess <= 0.0 && tol <= 0.01 && cloud.len() == expected,
        format!(
            "{} points, worst excess {excess:.2e} beyond tol {tol:.2e}",
            cloud.len()
        ),
    )
}

fn conjugacy() -> Result<Outcome> {
    const DEPTH: usize = 40;
    let f = PotentialFamily::quad_tent();
    let bound = 2.0 * LAMBDA.powi(DEPTH as i32) * f.sup_norm().max / (1.0 - LAMBDA) + 1e-10;
    let (mut conj, mut coc) = (0.0f64, 0.0f64);
    for s in 0..100u64 {
        let x = CirclePoint::lebesgue(1000 + s);
        let a = SymbolStream::random(s, 0, 2);
        let c = SymbolStream::random(s, 1, 2);
        let b = SymbolStream::random(s, 2, 2);
        let step = conjugacy_step(&x, &a, &c, &b, &f, LAMBDA, DEPTH)?;
        conj = conj.max(step.discrepancy().unwrap_or(f64::INFINITY));
        coc = coc.max(cocycle_check(
            &x,
            b.get(0)?,
            &ControlWord::new(c, a),
            DEPTH,
            &f,
            LAMBDA,
        )?);
    }
    outcome(
        conj <= bound && coc <= bound,
        format!("conjugacy {conj:.1e}, cocycle {coc:.1e}, bound {bound:.1e}"),
    )
}

fn duality() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let v = solve_value(&f, LAMBDA, Sign::Max, 8192, 1e-10)?;
    let (z, vmax) = v.argmax();
    let nu = Trace::Dirac { z };
    let psi = dual_functional(&v.grid, &f, LAMBDA, &nu)?;
    let gap = (psi.value - (1.0 - LAMBDA) * vmax).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..50 {
        let amp = rng.gen_range(0.01..=0.5);
        // half smooth, half rough
        let p = if i % 2 == 0 {
            smooth_perturbation(&mut rng, v.n(), amp)
        } else {
            random_grid(&mut rng, v.n(), amp)
        };
        let w = v.grid.zip_with(&p, |a, b| a + b)?;
        let q = dual_functional(&w, &f, LAMBDA, &nu)?;
        // the grid supremum can undershoot by q.slack; psi(v) itself is known
        // only within 2 tol
        worst = worst.max(psi.value - q.value - q.slack - 2.0 * v.tol);
    }
    outcome(
        gap <= 2.0 * v.tol && worst <= 0.0,
        format!(
            "|psi(v) - (1-l) v(z)| = {gap:.1e} (2 tol {:.1e}), worst drop {worst:.2e}",
            2.0 * v.tol
        ),
    )
}

fn discounted_measure() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let v = solve_value(&f, LAMBDA, Sign::Max, 8192, 1e-10)?;
    let (z, vmax) = v.argmax();
    let x0 = CirclePoint::from_f64(z);
    let meas_tol = 1e-12;
    let path = optimal_sequences(&v, &f, &x0, truncation_for(&f, LAMBDA, meas_tol))?;
    let mu = empirical_discounted(&x0, &path.control(), LAMBDA, meas_tol, &f)?;
    let MeasureKind::Discounted { tail_mass, .. } = mu.kind else {
        unreachable!()
    };
    let err = (integrate_payoff(&mu, &f)? - (1.0 - LAMBDA) * vmax).abs();
    let err_tol = measure_payoff_tolerance(&v, &f, tail_mass);
    let defect = discounted_holonomy_defect(&mu, &Trace::Dirac { z }, LAMBDA, DEFAULT_TEST_ORDER)?;
    let resid = support_check(&mu, &v.grid, &f, SupportMode::Discounted(LAMBDA))?;
    let resid_tol = 2.0 * v.tol + interpolation_slack(&v, &f);
    outcome(
        err <= err_tol && defect <= 2.0 * tail_mass + 1e-8 && resid <= resid_tol,
        format!(
            "payoff err {err:.1e} (tol {err_tol:.1e}), defect {defect:.1e}, support residual {resid:.1e} (tol {resid_tol:.1e})"
        ),
    )
}

fn discount_limit() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let lambdas = [0.9, 0.99, 0.999];
    let grids: Vec<usize> = lambdas
        .iter()
        .map(|&l| grid_for_lambda(8192, l, 1 << 16))
        .collect();
    let rows = discount_limit_schedule(&f, &lambdas, &grids, 1e-7, 12)?;
    let contains = rows.iter().all(|r| r.oracle <= r.umax + r.tol);
    let decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let certified = rows[0].oracle >= 2.0 / 3.0 - 1e-9;
    let gaps: Vec<String> = rows.iter().map(|r| format!("{:.2e}", r.gap)).collect();
    outcome(
        contains && decreasing && certified,
        format!(
            "oracle {:.12}, gaps [{}], grids {grids:?}",
            rows[0].oracle,
            gaps.join(", ")
        ),
    )
}

fn srb() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let past = sample_srb(&f, LAMBDA, &Observable::PotentialAtPast, 100_000, 1e-10, 9)?;
    let marginal_ok = (past.mean - 7.0 / 24.0).abs() <= 3.0 * past.std_error;

    let mut outliers = 0;
    let mut refs = Vec::new();
    for (lambda, seed) in [(0.3, 31), (0.7, 71)] {
        let r = birkhoff_experiment(&f, lambda, 100_000, 20, 100_000, seed)?;
        outliers += r.outliers();
        refs.push(r);
    }
    let joint =
        3.0 * refs[0].reference_sigma.hypot(refs[1].reference_sigma) + refs[0].bias + refs[1].bias;
    let ref_gap = (refs[0].reference - refs[1].reference).abs();
    outcome(
        marginal_ok && outliers == 0 && ref_gap <= joint,
        format!(
            "E[A_b(x)] = {:.5} +- {:.1e} vs 7/24, {outliers} of 40 orbit averages outside 3 sigma, references {:.5} / {:.5} (gap {ref_gap:.1e}, allowed {joint:.1e})",
            past.mean, past.std_error, refs[0].reference, refs[1].reference
        ),
    )
}

fn nonattractor() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let streams = [
        SymbolStream::constant(0),
        SymbolStream::constant(1),
        SymbolStream::repeat(vec![0, 0, 1]),
        SymbolStream::random(5, 0, 2),
        SymbolStream::random(6, 0, 2),
    ];
    let mut ok = true;
    for c in &streams {
        let trace = nonattractor_trace(1.4, c, 2000, &f, LAMBDA)?;
        let mut seen: Vec<_> = trace.iter().map(|(x, _)| x.exact_ratio()).collect();
        seen.sort_unstable();
        seen.dedup();
        ok &= trace.len() == 2001 && seen == vec![Some((1, 3)), Some((2, 3))];
    }
    outcome(
        ok,
        format!("{} control streams, 2000 steps each", streams.len()),
    )
}

fn grid_refinement() -> Result<Outcome> {
    let f = PotentialFamily::quad_tent();
    let coarse = solve_value(&f, LAMBDA, Sign::Max, 4096, 1e-10)?;
    let fine = solve_value(&f, LAMBDA, Sign::Max, 8192, 1e-10)?;
    let m = 4 * 8192;
    let diff = (0..m)
        .map(|j| {
            let x = j as f64 / m as f64;
            (coarse.eval(x) - fine.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    let budget = coarse.tol + fine.tol;
    outcome(
        diff <= budget,
        format!("difference {diff:.1e}, budget {budget:.1e}"),
    )
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Result<Outcome>);
    let criteria: [Criterion; 11] = [
        ("closed forms for a constant family", 1, closed_forms),
        ("Bellman operator laws", 1, bellman_laws),
        ("reference settings inside the boundaries", 10, || {
            example_sandwich(false)
        }),
        ("self-similarity of the chaos cloud", 5, || {
            example_sandwich(true)
        }),
        ("conjugacy and cocycle fuzz", 1, conjugacy),
        ("duality at the solution", 5, duality),
        ("optimal discounted measure", 5, discounted_measure),
        ("discount limit bracket", 60, discount_limit),
        ("SRB marginal and time averages", 30, srb),
        ("orbit of 1/3 stays on its cycle", 1, nonattractor),
        ("grid refinement", 10, grid_refinement),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let (ok, detail) = match result {
            Ok(o) => (o.passed && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s of {budget}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
