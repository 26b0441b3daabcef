//! Holonomic and discounted holonomic measures, the cycle oracle for the
//! critical value, and the dual functional.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::{self, GridFunction, Sign, ValueFunction};
use crate::circle::{BitWindow, Branch, CirclePoint};
use crate::error::{check_lambda, Error, Result};
use crate::potentials::PotentialFamily;
use crate::skew::{depth_for_tol, ControlWord};

/// Default trigonometric order of the defect test functions.
pub const DEFAULT_TEST_ORDER: usize = 8;

/// Longest cycle word the oracle enumerates.
pub const MAX_ORACLE_LEN: usize = 16;

/// `tau_a(x)` on float coordinates via the exact digit window.
#[inline]
pub fn tau(x: f64, a: Branch) -> f64 {
    BitWindow::from_f64(x).inverse_branch(a).to_f64()
}

/// A weighted atom at `(x, c, a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub c: usize,
    pub a: Branch,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureKind {
    /// Uniform weights along `n` steps of a backward path.
    Birkhoff {
        n: usize,
    },
    /// Weights `(1 - lambda) lambda^i`, truncated and renormalised.
    Discounted {
        lambda: f64,
        truncation: usize,
        /// `lambda^truncation`, the mass dropped before renormalising.
        tail_mass: f64,
        start: f64,
    },
    /// Uniform weights on a closed cycle.
    Cycle {
        period: usize,
    },
    Custom,
}

/// A probability on `X x C x I` with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<Atom>,
    pub kind: MeasureKind,
}

/// Order-independent sum: sorted before accumulating, so any permutation of
/// the inputs gives the same bits.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

impl EmpiricalMeasure {
    /// Validates weights (nonnegative, total 1 within 1e-12) and symbols.
    pub fn new(atoms: Vec<Atom>, kind: MeasureKind) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter(
                "a measure needs at least one atom".into(),
            ));
        }
        if let Some(bad) = atoms
            .iter()
            .find(|t| !(t.w >= 0.0) || t.a > 1 || !t.x.is_finite())
        {
            return Err(Error::InvalidParameter(format!("invalid atom {bad:?}")));
        }
        let total = stable_sum(atoms.iter().map(|t| t.w).collect());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(EmpiricalMeasure { atoms, kind })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        stable_sum(self.atoms.iter().map(|t| t.w).collect())
    }

    pub fn integrate<G: Fn(f64, usize, Branch) -> f64>(&self, g: G) -> f64 {
        stable_sum(self.atoms.iter().map(|t| t.w * g(t.x, t.c, t.a)).collect())
    }

    fn check_family(&self, f: &PotentialFamily) -> Result<()> {
        match self.atoms.iter().find(|t| t.c >= f.len()) {
            Some(t) => Err(Error::IndexOutOfRange {
                symbol: t.c,
                size: f.len(),
            }),
            None => Ok(()),
        }
    }
}

/// Uniform measure on `(x_i, c_i, a_i)`, `i < n`, with `x_{i+1} = tau_{a_i}(x_i)`.
pub fn empirical_from_orbit(
    x0: &CirclePoint,
    ctrl: &ControlWord,
    n: usize,
    f: &PotentialFamily,
) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    let atoms = path_atoms(x0, ctrl, n, f, |_| 1.0 / n as f64)?;
    EmpiricalMeasure::new(atoms, MeasureKind::Birkhoff { n })
}

fn path_atoms<W: Fn(usize) -> f64>(
    x0: &CirclePoint,
    ctrl: &ControlWord,
    n: usize,
    f: &PotentialFamily,
    weight: W,
) -> Result<Vec<Atom>> {
    let (cs, as_) = ctrl.prefix(n, f.len())?;
    let mut w = x0.window();
    Ok(cs
        .into_iter()
        .zip(as_)
        .enumerate()
        .map(|(i, (c, a))| {
            let atom = Atom {
                x: w.to_f64(),
                c,
                a,
                w: weight(i),
            };
            w = w.inverse_branch(a);
            atom
        })
        .collect())
}

/// `(1 - lambda) sum_i lambda^i delta_{(x_i, c_i, a_i)}`, truncated where the
/// geometric tail of the payoff series drops below `tol`, then renormalised.
pub fn empirical_discounted(
    x0: &CirclePoint,
    ctrl: &ControlWord,
    lambda: f64,
    tol: f64,
    f: &PotentialFamily,
) -> Result<EmpiricalMeasure> {
    check_lambda(lambda)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = truncation_for(f, lambda, tol);
    let tail_mass = lambda.powi(n as i32);
    let norm = (1.0 - lambda) / (1.0 - tail_mass);
    let atoms = path_atoms(x0, ctrl, n, f, |i| norm * lambda.powi(i as i32))?;
    // renormalise exactly against rounding in the geometric weights
    let total = stable_sum(atoms.iter().map(|t| t.w).collect());
    let atoms = atoms
        .into_iter()
        .map(|t| Atom {
            w: t.w / total,
            ..t
        })
        .collect();
    EmpiricalMeasure::new(
        atoms,
        MeasureKind::Discounted {
            lambda,
            truncation: n,
            tail_mass,
            start: x0.to_f64(),
        },
    )
}

/// Truncation depth for discounted measures: the series depth for `tol`,
/// and at least one atom.
pub fn truncation_for(f: &PotentialFamily, lambda: f64, tol: f64) -> usize {
    depth_for_tol(f, lambda, tol).max(1)
}

/// Test functions `1`, `cos 2 pi k x`, `sin 2 pi k x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFn {
    One,
    Cos(usize),
    Sin(usize),
}

impl TestFn {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        use std::f64::consts::TAU;
        match self {
            TestFn::One => 1.0,
            TestFn::Cos(k) => (TAU * k as f64 * x).cos(),
            TestFn::Sin(k) => (TAU * k as f64 * x).sin(),
        }
    }

    /// Integral against Lebesgue measure.
    pub fn lebesgue_mean(self) -> f64 {
        match self {
            TestFn::One => 1.0,
            _ => 0.0,
        }
    }
}

/// `{1} u {cos 2 pi k x, sin 2 pi k x : 1 <= k <= order}`
pub fn test_basis(order: usize) -> Vec<TestFn> {
    std::iter::once(TestFn::One)
        .chain((1..=order).flat_map(|k| [TestFn::Cos(k), TestFn::Sin(k)]))
        .collect()
}

/// `max_g |int g(tau_a x) - g(x) dmu|` over the test basis.
pub fn holonomy_defect(mu: &EmpiricalMeasure, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "test order must be at least 1".into(),
        ));
    }
    Ok(test_basis(order)
        .into_par_iter()
        .map(|g| mu.integrate(|x, _, a| g.eval(tau(x, a)) - g.eval(x)).abs())
        .reduce(|| 0.0, f64::max))
}

/// The trace `nu` of a discounted holonomic measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trace {
    Dirac { z: f64 },
    Lebesgue,
}

impl Trace {
    pub fn integrate_test(&self, g: TestFn) -> f64 {
        match *self {
            Trace::Dirac { z } => g.eval(z),
            Trace::Lebesgue => g.lebesgue_mean(),
        }
    }

    pub fn integrate_grid(&self, w: &GridFunction) -> f64 {
        match *self {
            Trace::Dirac { z } => w.eval(z),
            Trace::Lebesgue => w.mean(),
        }
    }
}

/// `max_w |int lambda w(tau_a x) - w(x) dmu + (1 - lambda) int w dnu|`.
pub fn discounted_holonomy_defect(
    mu: &EmpiricalMeasure,
    nu: &Trace,
    lambda: f64,
    order: usize,
) -> Result<f64> {
    check_lambda(lambda)?;
    match mu.kind {
        MeasureKind::Discounted { lambda: l, .. } if l == lambda => {}
        MeasureKind::Discounted { lambda: l, .. } => {
            return Err(Error::TraceMismatch(format!(
                "measure was built with discount {l}, checked against {lambda}"
            )))
        }
        ref k => {
            return Err(Error::TraceMismatch(format!(
                "discounted defect needs a discounted measure, got {k:?}"
            )))
        }
    }
    if order == 0 {
        return Err(Error::InvalidParameter(
            "test order must be at least 1".into(),
        ));
    }
    Ok(test_basis(order)
        .into_par_iter()
        .map(|g| {
            let flow = mu.integrate(|x, _, a| lambda * g.eval(tau(x, a)) - g.eval(x));
            (flow + (1.0 - lambda) * nu.integrate_test(g)).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// `int A_c(tau_a x) dmu`
pub fn integrate_payoff(mu: &EmpiricalMeasure, f: &PotentialFamily) -> Result<f64> {
    mu.check_family(f)?;
    Ok(mu.integrate(|x, c, a| f.value(c, tau(x, a))))
}

/// Best cyclic holonomic measure found by the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleWitness {
    /// Average payoff, a certified lower bound for the critical value.
    pub value: f64,
    /// Branch word `(a_0, ..., a_{k-1})`.
    pub word: Vec<Branch>,
    /// Best potential at each step.
    pub c: Vec<usize>,
    /// Cycle points `x_i = num_i / (2^k - 1)`; `num_i = 2^k - 1` stands for
    /// the expansion `0.111...`.
    pub numerators: Vec<u64>,
    pub denominator: u64,
}

impl CycleWitness {
    pub fn period(&self) -> usize {
        self.word.len()
    }

    /// Uniform measure on the cycle atoms.
    pub fn measure(&self) -> EmpiricalMeasure {
        let k = self.period();
        let atoms = (0..k)
            .map(|i| Atom {
                x: periodic_window(self.numerators[i], k).to_f64(),
                c: self.c[i],
                a: self.word[i],
                w: 1.0 / k as f64,
            })
            .collect();
        EmpiricalMeasure::new(atoms, MeasureKind::Cycle { period: k }).expect("uniform weights")
    }
}

/// Window of the purely periodic expansion with period digits `num` (`k` bits,
/// most significant first). `num = 2^k - 1` gives `0.111... = 1`, kept as
/// the digit stream so the branch `tau_1` stays closed on it.
fn periodic_window(num: u64, k: usize) -> BitWindow {
    BitWindow((0..64).fold(0u64, |w, i| w | ((num >> (k - 1 - i % k)) & 1) << (63 - i)))
}

fn evaluate_cycle(f: &PotentialFamily, k: usize, bits: u64) -> CycleWitness {
    let d = (1u64 << k) - 1;
    let word: Vec<Branch> = (0..k).map(|i| ((bits >> i) & 1) as Branch).collect();
    // the fixed point of tau_{a_{k-1}} o ... o tau_{a_0} has period digits
    // a_{k-1} ... a_0, i.e. numerator sum_j a_j 2^j; each branch rotates
    // the period right by one digit
    let mut nums = Vec::with_capacity(k + 1);
    nums.push(bits);
    for (i, &a) in word.iter().enumerate() {
        nums.push((nums[i] >> 1) | ((a as u64) << (k - 1)));
    }
    debug_assert_eq!(nums[k], nums[0]);
    let mut total = 0.0;
    let mut cs = Vec::with_capacity(k);
    for &num in &nums[1..] {
        let (c, v) = f.best(periodic_window(num, k).to_f64());
        cs.push(c);
        total += v;
    }
    nums.pop();
    CycleWitness {
        value: total / k as f64,
        word,
        c: cs,
        numerators: nums,
        denominator: d,
    }
}

/// A word is primitive when it is not a repetition of a shorter word.
fn is_primitive(k: usize, bits: u64) -> bool {
    let mask = (1u64 << k) - 1;
    (1..k)
        .filter(|p| k % p == 0)
        .all(|p| ((bits >> p) | (bits << (k - p))) & mask != bits)
}

/// Best cycle average over all primitive branch words of length at most
/// `max_len` (a repeated word has the same average as its root). Ties go to
/// the shortest word, then the smallest binary code.
pub fn cycle_oracle(f: &PotentialFamily, max_len: usize) -> Result<CycleWitness> {
    if max_len == 0 || max_len > MAX_ORACLE_LEN {
        return Err(Error::InvalidParameter(format!(
            "oracle length must be in 1..={MAX_ORACLE_LEN}, got {max_len}"
        )));
    }
    let best = (1..=max_len)
        .flat_map(|k| {
            (0..1u64 << k)
                .filter(move |&b| is_primitive(k, b))
                .map(move |b| (k, b))
        })
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, b)| evaluate_cycle(f, k, b))
        .reduce_with(|u, v| {
            let key = |w: &CycleWitness| {
                (
                    w.period(),
                    w.word
                        .iter()
                        .rev()
                        .fold(0u64, |acc, &a| acc << 1 | a as u64),
                )
            };
            if v.value > u.value || (v.value == u.value && key(&v) < key(&u)) {
                v
            } else {
                u
            }
        })
        .expect("at least one word");
    Ok(best)
}

/// Value of the dual functional on a grid function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualValue {
    /// `(1 - lambda) int w dnu + sup` with the supremum over the refined grid.
    pub value: f64,
    /// The refined-grid supremum alone.
    pub sup_term: f64,
    /// Lipschitz bound on how far the true supremum can exceed the grid one.
    pub slack: f64,
}

/// `psi(w) = (1 - lambda) int w dnu + sup_{x,c,a} [lambda w(tau_a x) - w(x) + A_c(tau_a x)]`
///
/// The supremum runs over `4N` points. Between them the bracket moves by at
/// most `Lip_h / (8N)`, with
/// `Lip_h = lambda Lip(w) / 2 + Lip(w) + maxLip(A) / 2`.
pub fn dual_functional(
    w: &GridFunction,
    f: &PotentialFamily,
    lambda: f64,
    nu: &Trace,
) -> Result<DualValue> {
    check_lambda(lambda)?;
    let n = w.n();
    let m = 4 * n;
    let sup_term = (0..m)
        .into_par_iter()
        .with_min_len(4096)
        .map(|j| {
            let x = j as f64 / m as f64;
            let wx = w.eval(x);
            (0..2)
                .map(|a| {
                    let xa = tau(x, a);
                    lambda * w.eval(xa) - wx + f.best(xa).1
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let lip_w = w.lipschitz();
    let lip_h = lambda * lip_w / 2.0 + lip_w + f.lipschitz().max / 2.0;
    Ok(DualValue {
        value: (1.0 - lambda) * nu.integrate_grid(w) + sup_term,
        sup_term,
        slack: lip_h / (8.0 * n as f64),
    })
}

/// Form of the support test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportMode {
    /// `A_c(tau_a x) + lambda v(tau_a x) - v(x)` with `v = v_lambda`.
    Discounted(f64),
    /// `A_c(tau_a x) - m + v(tau_a x) - v(x)` with a sub-action `v`.
    Limit(f64),
}

/// Largest absolute residual over the atoms of `mu`.
pub fn support_check(
    mu: &EmpiricalMeasure,
    v: &GridFunction,
    f: &PotentialFamily,
    mode: SupportMode,
) -> Result<f64> {
    mu.check_family(f)?;
    let (scale, shift) = match mode {
        SupportMode::Discounted(l) => {
            check_lambda(l)?;
            (l, 0.0)
        }
        SupportMode::Limit(m) => (1.0, m),
    };
    Ok(mu
        .atoms
        .par_iter()
        .map(|t| {
            let xa = tau(t.x, t.a);
            (f.value(t.c, xa) - shift + scale * v.eval(xa) - v.eval(t.x)).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// One row of the discount-limit table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub lambda: f64,
    /// `(1 - lambda) max v_lambda`
    pub umax: f64,
    /// `(1 - lambda) int v_lambda dl`
    pub ulebesgue: f64,
    /// Cycle-oracle lower bound for the critical value.
    pub oracle: f64,
    /// `umax - oracle`
    pub gap: f64,
    /// Error bound on `umax` and `ulebesgue`: `(1 - lambda) tol(v)`.
    pub tol: f64,
    pub grid_n: usize,
    pub iterations: usize,
}

/// Grid size for a discount: `base` scaled by `0.1 / (1 - lambda)`, rounded up
/// to a power of two and clamped to `[base, cap]`.
pub fn grid_for_lambda(base: usize, lambda: f64, cap: usize) -> usize {
    // the small offset keeps 0.1 / (1 - 0.9) from rounding up a power of two
    let want = (base as f64 * (0.1 / (1.0 - lambda) - 1e-9).max(1.0)).ceil() as usize;
    want.next_power_of_two().clamp(base, cap.max(base))
}

/// Solves `v_lambda^+` along an increasing list of discounts, each warm-started
/// from the previous sub-action. `u_tol` bounds the stopping error on the
/// `(1 - lambda) v` scale.
pub fn discount_limit_schedule(
    f: &PotentialFamily,
    lambdas: &[f64],
    grid_ns: &[usize],
    u_tol: f64,
    oracle_len: usize,
) -> Result<Vec<ScheduleRow>> {
    if lambdas.is_empty() || lambdas.len() != grid_ns.len() {
        return Err(Error::InvalidParameter(
            "need one grid size per discount and at least one discount".into(),
        ));
    }
    for w in lambdas.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "discount schedule must be strictly increasing".into(),
            ));
        }
    }
    let oracle = cycle_oracle(f, oracle_len)?.value;
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut prev: Option<ValueFunction> = None;
    for (&lambda, &n) in lambdas.iter().zip(grid_ns) {
        check_lambda(lambda)?;
        let start = match &prev {
            None => GridFunction::zeros(n),
            Some(p) => {
                // b + u / (1 - lambda) with b, u from the previous discount
                let top = p.grid.max();
                let u = (1.0 - p.lambda) * top;
                GridFunction::from_fn(n, |x| p.eval(x) - top + u / (1.0 - lambda))
            }
        };
        let v = bellman::solve_value_from(f, lambda, Sign::Max, u_tol / (1.0 - lambda), start)?;
        let umax = (1.0 - lambda) * v.grid.max();
        rows.push(ScheduleRow {
            lambda,
            umax,
            ulebesgue: (1.0 - lambda) * v.grid.mean(),
            oracle,
            gap: umax - oracle,
            tol: (1.0 - lambda) * v.tol,
            grid_n: n,
            iterations: v.iterations,
        });
        prev = Some(v);
    }
    Ok(rows)
}
