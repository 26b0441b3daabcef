//! Value iteration for the boundary functions `v^+` and `v^-`:
//! `v(x) = ext_{c,a} A_c(tau_a x) + lambda v(tau_a x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{BitWindow, Branch, CirclePoint};
use crate::error::{check_lambda, Error, Result};
use crate::potentials::PotentialFamily;

const PAR_MIN_LEN: usize = 2048;

/// Periodic piecewise-linear function on the nodes `x_i = i / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "grid needs at least one node".into(),
            ));
        }
        Ok(GridFunction { values })
    }

    pub fn constant(n: usize, k: f64) -> Self {
        GridFunction {
            values: vec![k; n.max(1)],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// Samples `g` at the nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, g: F) -> Self {
        GridFunction {
            values: (0..n.max(1)).map(|i| g(i as f64 / n as f64)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n() as f64
    }

    /// Linear interpolation, read modulo 1.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let t = x.rem_euclid(1.0) * n as f64;
        let fl = t.floor();
        let i = (fl as usize) % n;
        let frac = t - fl;
        if frac == 0.0 {
            return self.values[i];
        }
        let (u, v) = (self.values[i], self.values[(i + 1) % n]);
        u + (v - u) * frac
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First node attaining the maximum.
    pub fn argmax(&self) -> usize {
        let m = self.max();
        self.values.iter().position(|&v| v == m).unwrap_or(0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Integral against Lebesgue measure; exact for the interpolant.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// Exact Lipschitz constant of the interpolant in the circle metric.
    pub fn lipschitz(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| (self.values[(i + 1) % n] - self.values[i]).abs())
            .fold(0.0, f64::max)
            * n as f64
    }

    pub fn map<F: Fn(f64) -> f64>(&self, g: F) -> Self {
        GridFunction {
            values: self.values.iter().map(|&v| g(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, g: F) -> Result<Self> {
        self.same_grid(other)?;
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| g(u, v))
                .collect(),
        })
    }

    /// `sup |self - other|` over the nodes.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max))
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.n() == other.n() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "grid sizes differ: {} vs {}",
                self.n(),
                other.n()
            )))
        }
    }
}

/// Which boundary: `Max` gives the upper graph `v^+`, `Min` the lower `v^-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Max,
    Min,
}

impl Sign {
    #[inline]
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sign::Max => candidate > incumbent,
            Sign::Min => candidate < incumbent,
        }
    }

    #[inline]
    fn pick(self, u: f64, v: f64) -> f64 {
        match self {
            Sign::Max => u.max(v),
            Sign::Min => u.min(v),
        }
    }

    /// Extremal member at `x`, smallest index on ties.
    #[inline]
    fn member(self, f: &PotentialFamily, x: f64) -> (usize, f64) {
        match self {
            Sign::Max => f.best(x),
            Sign::Min => f.worst(x),
        }
    }
}

/// The discretised operator with the payoff extremum over `c` cached for
/// each node and branch.
#[derive(Clone, Debug)]
pub struct BellmanOperator {
    n: usize,
    lambda: f64,
    sign: Sign,
    /// `payoff[2 i + a] = ext_c A_c(tau_a x_i)`
    payoff: Vec<f64>,
}

impl BellmanOperator {
    pub fn new(f: &PotentialFamily, lambda: f64, sign: Sign, n: usize) -> Result<Self> {
        check_lambda(lambda)?;
        check_grid(n, 2)?;
        let payoff = (0..2 * n)
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|k| {
                let (i, a) = (k / 2, k % 2);
                sign.member(f, branch_point(i, a, n)).1
            })
            .collect();
        Ok(BellmanOperator {
            n,
            lambda,
            sign,
            payoff,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid value at `tau_a x_i`: a node when `i` is even, a midpoint otherwise.
    #[inline]
    fn at_branch(values: &[f64], i: usize, a: usize) -> f64 {
        let n = values.len();
        let j = i / 2 + a * n / 2;
        if i % 2 == 0 {
            values[j]
        } else {
            0.5 * (values[j] + values[(j + 1) % n])
        }
    }

    pub fn apply(&self, g: &GridFunction) -> Result<GridFunction> {
        if g.n() != self.n {
            return Err(Error::InvalidParameter(format!(
                "operator built for N = {}, got a grid of {}",
                self.n,
                g.n()
            )));
        }
        let mut out = vec![0.0; self.n];
        self.apply_into(&g.values, &mut out);
        Ok(GridFunction { values: out })
    }

    fn apply_into(&self, src: &[f64], dst: &mut [f64]) {
        let (lambda, sign, payoff) = (self.lambda, self.sign, &self.payoff);
        dst.par_iter_mut()
            .with_min_len(PAR_MIN_LEN)
            .enumerate()
            .for_each(|(i, out)| {
                let v0 = payoff[2 * i] + lambda * Self::at_branch(src, i, 0);
                let v1 = payoff[2 * i + 1] + lambda * Self::at_branch(src, i, 1);
                *out = sign.pick(v0, v1);
            });
    }
}

fn check_grid(n: usize, min: usize) -> Result<()> {
    if n < min || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be even and at least {min}, got {n}"
        )));
    }
    Ok(())
}

/// `tau_a(x_i) = (i + a N) / (2 N)`
#[inline]
fn branch_point(i: usize, a: usize, n: usize) -> f64 {
    (i + a * n) as f64 / (2 * n) as f64
}

/// One application of the Bellman operator.
pub fn bellman_step(
    g: &GridFunction,
    f: &PotentialFamily,
    lambda: f64,
    sign: Sign,
) -> Result<GridFunction> {
    BellmanOperator::new(f, lambda, sign, g.n())?.apply(g)
}

/// A solved boundary function with its error budget.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    pub grid: GridFunction,
    /// Bound on `sup_x |grid(x) - v(x)|` over the whole circle.
    pub tol: f64,
    pub lambda: f64,
    pub sign: Sign,
    pub iterations: usize,
    /// Final sup-change between sweeps.
    pub last_change: f64,
}

impl ValueFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.grid.eval(x)
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// `(node, value)` of the maximum.
    pub fn argmax(&self) -> (f64, f64) {
        let i = self.grid.argmax();
        (self.grid.node(i), self.grid.values()[i])
    }
}

/// Bound on `Lip(v)`: `maxLip / (2 - lambda)`.
pub fn value_lipschitz(f: &PotentialFamily, lambda: f64) -> f64 {
    f.lipschitz().max / (2.0 - lambda)
}

/// Error budget of a grid solution: contraction a-posteriori term,
/// interpolation at branch points, and off-grid interpolation.
pub fn tolerance(f: &PotentialFamily, lambda: f64, n: usize, last_change: f64) -> f64 {
    let lip = value_lipschitz(f, lambda);
    let r = lambda / (1.0 - lambda);
    last_change * r + lip / n as f64 * r + lip / (2.0 * n as f64) + 1e-12
}

/// Value iteration from zero until the sup-change drops to `tol (1 - lambda)`.
pub fn solve_value(
    f: &PotentialFamily,
    lambda: f64,
    sign: Sign,
    n: usize,
    tol: f64,
) -> Result<ValueFunction> {
    solve_value_from(f, lambda, sign, tol, GridFunction::zeros(n))
}

/// Value iteration from a warm start (e.g. the solution for a nearby discount).
pub fn solve_value_from(
    f: &PotentialFamily,
    lambda: f64,
    sign: Sign,
    tol: f64,
    start: GridFunction,
) -> Result<ValueFunction> {
    check_lambda(lambda)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = start.n();
    check_grid(n, 16)?;
    let op = BellmanOperator::new(f, lambda, sign, n)?;
    if op.payoff.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonConvergence {
            iterations: 0,
            last_change: f64::NAN,
        });
    }
    let target = tol * (1.0 - lambda);
    // first change is at most |L 0| + (1 + lambda) |start| <= T0 + 2 |start|
    let span = f.sup_norm().max / (1.0 - lambda) + 2.0 * start.sup_norm() + 1.0;
    let cap = ((target / span).ln() / lambda.ln()).ceil().max(0.0) as usize * 2 + 1000;

    let mut cur = start.values;
    let mut next = vec![0.0; n];
    for it in 1..=cap {
        op.apply_into(&cur, &mut next);
        let change = cur
            .iter()
            .zip(&next)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut cur, &mut next);
        if !change.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                last_change: change,
            });
        }
        if change <= target {
            return Ok(ValueFunction {
                grid: GridFunction { values: cur },
                tol: tolerance(f, lambda, n, change),
                lambda,
                sign,
                iterations: it,
                last_change: change,
            });
        }
    }
    let last = cur
        .iter()
        .zip(&next)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    Err(Error::NonConvergence {
        iterations: cap,
        last_change: last,
    })
}

#[inline]
fn candidate(
    v: &GridFunction,
    f: &PotentialFamily,
    lambda: f64,
    w: BitWindow,
    c: usize,
    a: Branch,
) -> f64 {
    let xa = w.inverse_branch(a).to_f64();
    f.value(c, xa) + lambda * v.eval(xa)
}

/// Extremising pair `(c, a)` at `x`, ties to the lexicographically smallest.
fn best_pair(
    v: &GridFunction,
    f: &PotentialFamily,
    lambda: f64,
    sign: Sign,
    w: BitWindow,
) -> ((usize, Branch), f64) {
    let mut best = ((0, 0), candidate(v, f, lambda, w, 0, 0));
    for c in 0..f.len() {
        for a in 0..2 {
            if (c, a) == (0, 0) {
                continue;
            }
            let val = candidate(v, f, lambda, w, c, a);
            if sign.better(val, best.1) {
                best = ((c, a), val);
            }
        }
    }
    best
}

/// Optimal `(c, a)` at every node.
pub fn policy(v: &ValueFunction, f: &PotentialFamily) -> Vec<(usize, Branch)> {
    (0..v.n())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| {
            let w = CirclePoint::from_f64(v.grid.node(i)).window();
            best_pair(&v.grid, f, v.lambda, v.sign, w).0
        })
        .collect()
}

/// Greedy controls from `x0` and the exact backward path they trace.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPath {
    pub c: Vec<usize>,
    pub a: Vec<Branch>,
    /// `x_0, ..., x_n` with `x_{i+1} = tau_{a_i}(x_i)`.
    pub xs: Vec<CirclePoint>,
}

impl OptimalPath {
    pub fn control(&self) -> crate::skew::ControlWord {
        crate::skew::ControlWord::finite(
            self.c.clone(),
            self.a.iter().map(|&a| a as usize).collect(),
        )
    }
}

/// Follows the policy for `n` steps from `x0`, evaluating off-grid.
pub fn optimal_sequences(
    v: &ValueFunction,
    f: &PotentialFamily,
    x0: &CirclePoint,
    n: usize,
) -> Result<OptimalPath> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "path length must be at least 1".into(),
        ));
    }
    let mut path = OptimalPath {
        c: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        xs: Vec::with_capacity(n + 1),
    };
    let mut x = x0.clone();
    for _ in 0..n {
        let ((c, a), _) = best_pair(&v.grid, f, v.lambda, v.sign, x.window());
        path.c.push(c);
        path.a.push(a);
        let next = x.inverse_branch(a);
        path.xs.push(std::mem::replace(&mut x, next));
    }
    path.xs.push(x);
    Ok(path)
}

/// Normalised sub-action `b = v - max v` with the critical-value estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Subaction {
    pub b: GridFunction,
    /// `(1 - lambda) max v`
    pub u_est: f64,
    /// `sup_i |max_{c,a}[A_c(tau_a x_i) - u_est + b(tau_a x_i)] - b(x_i)|`
    pub residual: f64,
}

pub fn subaction(v: &ValueFunction, f: &PotentialFamily) -> Result<Subaction> {
    if v.sign != Sign::Max {
        return Err(Error::InvalidParameter(
            "the sub-action is built from the upper boundary".into(),
        ));
    }
    let top = v.grid.max();
    let b = v.grid.map(|x| x - top);
    let u_est = (1.0 - v.lambda) * top;
    let n = b.n();
    let residual = (0..n)
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| {
            let best = (0..2)
                .map(|a| {
                    let p = f.best(branch_point(i, a, n)).1;
                    p - u_est + BellmanOperator::at_branch(b.values(), i, a)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (best - b.values()[i]).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(Subaction { b, u_est, residual })
}

/// `A_c(tau_a x) + lambda v(tau_a x) - v(x)`; at most `2 tol` for the upper
/// boundary, and about zero at optimal pairs.
pub fn bellman_residual(
    v: &ValueFunction,
    f: &PotentialFamily,
    x: &CirclePoint,
    c: usize,
    a: Branch,
) -> Result<f64> {
    if a > 1 {
        return Err(Error::IndexOutOfRange {
            symbol: a as usize,
            size: 2,
        });
    }
    f.eval_f64(c, 0.0)?;
    let w = x.window();
    Ok(candidate(&v.grid, f, v.lambda, w, c, a) - v.eval(w.to_f64()))
}
