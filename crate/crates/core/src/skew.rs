//! Skew-product dynamics `G_c(x, y) = (T(x), A_c(x) + lambda y)` on the cylinder.
//!
//! The backward series is
//! `S_x(c, a) = sum_i lambda^i A_{c_i}(tau_{a_i} ... tau_{a_0} x)`,
//! so its first term already applies one inverse branch. With this indexing
//! `S_{T x}(b * c, pi(x) * a) = A_b(x) + lambda S_x(c, a)` holds term by term
//! and `sup S_x = v^+(x)` solves the Bellman equation.

use std::collections::VecDeque;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{BitWindow, Branch, CirclePoint, TailPolicy};
use crate::error::{check_lambda, Error, Result};
use crate::potentials::PotentialFamily;

/// Starting point of the reference chaos-game run.
pub const CHAOS_X0: f64 = 0.2472135954;
pub const CHAOS_Y0: f64 = 0.1;

/// Largest period accepted by [`periodic_points`] unless overridden.
pub const DEFAULT_PERIOD_CAP: usize = 20;

/// Default word budget for [`lambda_cloud_enumerate`].
pub const DEFAULT_WORD_BUDGET: u128 = 1 << 26;

#[derive(Clone, Debug, PartialEq)]
enum Generator {
    Finite,
    Repeat(Vec<usize>),
    Random {
        seed: u64,
        stream: u64,
        alphabet: usize,
    },
}

/// A one-sided symbol sequence: an explicit head followed by a generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolStream {
    head: VecDeque<usize>,
    gen: Generator,
    /// Index of the next generator symbol after the head.
    offset: u64,
}

fn random_rng(seed: u64, stream: u64, pos: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * pos as u128);
    rng
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, alphabet: usize) -> usize {
    ((rng.next_u64() as u128 * alphabet as u128) >> 64) as usize
}

impl SymbolStream {
    /// Exactly these symbols and nothing after.
    pub fn finite(symbols: Vec<usize>) -> Self {
        SymbolStream {
            head: symbols.into(),
            gen: Generator::Finite,
            offset: 0,
        }
    }

    /// `pattern` repeated forever.
    pub fn repeat(pattern: Vec<usize>) -> Self {
        assert!(!pattern.is_empty(), "repeat pattern must be nonempty");
        SymbolStream {
            head: VecDeque::new(),
            gen: Generator::Repeat(pattern),
            offset: 0,
        }
    }

    pub fn constant(symbol: usize) -> Self {
        Self::repeat(vec![symbol])
    }

    /// Independent uniform symbols in `0..alphabet`. Distinct `stream` values
    /// give independent sequences for the same seed.
    pub fn random(seed: u64, stream: u64, alphabet: usize) -> Self {
        assert!(alphabet >= 1, "alphabet must be nonempty");
        SymbolStream {
            head: VecDeque::new(),
            gen: Generator::Random {
                seed,
                stream,
                alphabet,
            },
            offset: 0,
        }
    }

    /// Prefix followed by the symbols of `rest`.
    pub fn with_prefix(prefix: &[usize], rest: SymbolStream) -> Self {
        let mut s = rest;
        for &p in prefix.iter().rev() {
            s.prepend(p);
        }
        s
    }

    /// Number of available symbols, `None` when unbounded.
    pub fn available(&self) -> Option<usize> {
        match self.gen {
            Generator::Finite => Some(self.head.len()),
            _ => None,
        }
    }

    pub fn get(&self, i: usize) -> Result<usize> {
        if i < self.head.len() {
            return Ok(self.head[i]);
        }
        let j = self.offset + (i - self.head.len()) as u64;
        match &self.gen {
            Generator::Finite => Err(Error::PrefixExhausted {
                available: self.head.len(),
                requested: i + 1,
            }),
            Generator::Repeat(p) => Ok(p[(j % p.len() as u64) as usize]),
            Generator::Random {
                seed,
                stream,
                alphabet,
            } => Ok(draw(&mut random_rng(*seed, *stream, j), *alphabet)),
        }
    }

    /// The first `n` symbols.
    pub fn take(&self, n: usize) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = self.head.iter().copied().take(n).collect();
        if out.len() == n {
            return Ok(out);
        }
        let more = n - out.len();
        match &self.gen {
            Generator::Finite => {
                return Err(Error::PrefixExhausted {
                    available: self.head.len(),
                    requested: n,
                })
            }
            Generator::Repeat(p) => {
                let len = p.len() as u64;
                out.extend((0..more as u64).map(|k| p[((self.offset + k) % len) as usize]));
            }
            Generator::Random {
                seed,
                stream,
                alphabet,
            } => {
                let mut rng = random_rng(*seed, *stream, self.offset);
                out.extend((0..more).map(|_| draw(&mut rng, *alphabet)));
            }
        }
        Ok(out)
    }

    /// `s * self`
    pub fn prepend(&mut self, s: usize) {
        self.head.push_front(s);
    }

    pub fn prepended(&self, s: usize) -> Self {
        let mut t = self.clone();
        t.prepend(s);
        t
    }

    /// Drops the first symbol (the shift `sigma`).
    pub fn shift(&mut self) -> Result<usize> {
        if let Some(s) = self.head.pop_front() {
            return Ok(s);
        }
        let s = self.get(0)?;
        self.offset += 1;
        Ok(s)
    }

    pub fn shifted(&self) -> Result<Self> {
        let mut t = self.clone();
        t.shift()?;
        Ok(t)
    }
}

/// The pair of control sequences `(c, a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlWord {
    pub c: SymbolStream,
    pub a: SymbolStream,
}

impl ControlWord {
    pub fn new(c: SymbolStream, a: SymbolStream) -> Self {
        ControlWord { c, a }
    }

    pub fn finite(c: Vec<usize>, a: Vec<usize>) -> Self {
        Self::new(SymbolStream::finite(c), SymbolStream::finite(a))
    }

    pub fn constant(c: usize, a: usize) -> Self {
        Self::new(SymbolStream::constant(c), SymbolStream::constant(a))
    }

    pub fn periodic(c: Vec<usize>, a: Vec<usize>) -> Self {
        Self::new(SymbolStream::repeat(c), SymbolStream::repeat(a))
    }

    /// iid uniform `c` over `0..m` and `a` over `{0, 1}`.
    pub fn random(seed: u64, m: usize) -> Self {
        Self::new(
            SymbolStream::random(seed, 0, m),
            SymbolStream::random(seed, 1, 2),
        )
    }

    /// First `n` symbols of both sequences, validated against the alphabets.
    pub fn prefix(&self, n: usize, m: usize) -> Result<(Vec<usize>, Vec<Branch>)> {
        let c = self.c.take(n)?;
        let a = self.a.take(n)?;
        if let Some(&bad) = c.iter().find(|&&s| s >= m) {
            return Err(Error::IndexOutOfRange {
                symbol: bad,
                size: m,
            });
        }
        if let Some(&bad) = a.iter().find(|&&s| s > 1) {
            return Err(Error::IndexOutOfRange {
                symbol: bad,
                size: 2,
            });
        }
        Ok((c, a.into_iter().map(|s| s as Branch).collect()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub source: String,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    /// Radius within which the cloud is claimed to cover the target set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage_radius: Option<f64>,
}

/// Samples `(x, y)`; each lies within `error_radius` (in `y`) of the target set.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<(f64, f64)>,
    pub error_radius: f64,
    pub meta: CloudMeta,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_abs_y(&self) -> f64 {
        self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }
}

fn check_symbol(c: usize, f: &PotentialFamily) -> Result<()> {
    if c < f.len() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            symbol: c,
            size: f.len(),
        })
    }
}

/// `G_c(x, y) = (T(x), A_c(x) + lambda y)`.
pub fn apply_skew(
    x: &CirclePoint,
    y: f64,
    c: usize,
    f: &PotentialFamily,
    lambda: f64,
) -> Result<(CirclePoint, f64)> {
    check_lambda(lambda)?;
    let yn = f.eval(c, x)? + lambda * y;
    Ok((x.double(), yn))
}

/// Geometric tail bound `lambda^n max ||A_c|| / (1 - lambda)`.
pub fn tail_bound(f: &PotentialFamily, lambda: f64, n: usize) -> f64 {
    lambda.powi(n.min(i32::MAX as usize) as i32) * f.sup_norm().max / (1.0 - lambda)
}

/// Smallest truncation depth whose tail bound is at most `tol`.
pub fn depth_for_tol(f: &PotentialFamily, lambda: f64, tol: f64) -> usize {
    let sup = f.sup_norm().max;
    if sup == 0.0 {
        return 0;
    }
    let ratio = tol * (1.0 - lambda) / sup;
    if ratio >= 1.0 {
        return 0;
    }
    (ratio.ln() / lambda.ln()).ceil().max(0.0) as usize
}

/// Forward orbit of `(x0, y0)` under `G_{c_0}, G_{c_1}, ...`.
///
/// Runs `n` steps and keeps the states with index `i` in `burn_in..n`
/// (state `i` is the point after `i` maps). The radius is the distance
/// bound to the invariant set, `lambda^burn_in (|y0| + T0)`.
#[allow(clippy::too_many_arguments)]
pub fn orbit(
    x0: &CirclePoint,
    y0: f64,
    ctrl: &ControlWord,
    n: usize,
    burn_in: usize,
    f: &PotentialFamily,
    lambda: f64,
) -> Result<PointCloud> {
    check_lambda(lambda)?;
    if n <= burn_in {
        return Err(Error::InvalidParameter(format!(
            "orbit length {n} must exceed burn-in {burn_in}"
        )));
    }
    let cs = ctrl.c.take(n)?;
    let mut x = x0.clone();
    let mut y = y0;
    let mut points = Vec::with_capacity(n - burn_in);
    for (i, &c) in cs.iter().enumerate() {
        check_symbol(c, f)?;
        x.materialize(64);
        if i >= burn_in {
            points.push((x.to_f64(), y));
        }
        y = f.value(c, x.to_f64()) + lambda * y;
        x.double_in_place();
    }
    let t0 = annulus_bound(f, lambda)?;
    Ok(PointCloud {
        points,
        error_radius: lambda.powi(burn_in.min(i32::MAX as usize) as i32) * (y0.abs() + t0) + 1e-12,
        meta: CloudMeta {
            source: "orbit".into(),
            lambda,
            burn_in: Some(burn_in),
            ..Default::default()
        },
    })
}

#[inline]
fn series_from_window(
    mut w: BitWindow,
    c: &[usize],
    a: &[Branch],
    f: &PotentialFamily,
    lambda: f64,
) -> f64 {
    let mut sum = 0.0;
    let mut scale = 1.0;
    for (&ci, &ai) in c.iter().zip(a) {
        w = w.inverse_branch(ai);
        sum += scale * f.value(ci, w.to_f64());
        scale *= lambda;
    }
    sum
}

/// Truncated series `sum_{i<n} lambda^i A_{c_i}(tau_{a_i} ... tau_{a_0} x)` and
/// its rigorous tail bound.
pub fn partial_s(
    x: &CirclePoint,
    ctrl: &ControlWord,
    n: usize,
    f: &PotentialFamily,
    lambda: f64,
) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    let (c, a) = ctrl.prefix(n, f.len())?;
    Ok((
        series_from_window(x.window(), &c, &a, f, lambda),
        tail_bound(f, lambda, n),
    ))
}

/// `|S_{T x}(b * c, pi(x) * a) - (A_b(x) + lambda S_x(c, a))|` with depths
/// `n + 1` and `n`.
pub fn cocycle_check(
    x: &CirclePoint,
    b: usize,
    ctrl: &ControlWord,
    n: usize,
    f: &PotentialFamily,
    lambda: f64,
) -> Result<f64> {
    check_symbol(b, f)?;
    let shifted = ControlWord::new(ctrl.c.prepended(b), ctrl.a.prepended(x.address() as usize));
    let (lhs, _) = partial_s(&x.double(), &shifted, n + 1, f, lambda)?;
    let (s, _) = partial_s(x, ctrl, n, f, lambda)?;
    Ok((lhs - (f.eval(b, x)? + lambda * s)).abs())
}

/// `T0` slightly above `max ||A_c|| / (1 - lambda)`, so one step maps
/// `X x [-T0, T0]` strictly inside itself.
pub fn annulus_bound(f: &PotentialFamily, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(f.sup_norm().max / (1.0 - lambda) * (1.0 + 1e-9))
}

/// Steps after which any start with `|y| <= m_abs` has `|y| < T0`.
pub fn absorption_steps(m_abs: f64, f: &PotentialFamily, lambda: f64) -> Result<usize> {
    let t0 = annulus_bound(f, lambda)?;
    let inner = f.sup_norm().max / (1.0 - lambda);
    if m_abs < t0 {
        return Ok(0);
    }
    let gap = t0 - inner;
    if gap <= 0.0 {
        // zero family: |y_n| = lambda^n |y_0| and T0 = 0 is never reached
        return Err(Error::InvalidParameter(
            "the annulus is degenerate for an identically zero family".into(),
        ));
    }
    Ok((((m_abs + t0) / gap).ln() / (1.0 / lambda).ln()).ceil() as usize)
}

/// A periodic point of `G_c` projecting to `num / den`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicPoint {
    pub num: u64,
    pub den: u64,
    pub x: CirclePoint,
    pub y: f64,
}

/// All points of period `n` for the autonomous map `G_c`: `x = k / (2^n - 1)`
/// and `y = sum_{i<n} lambda^i A_c(T^{n-1-i} x) / (1 - lambda^n)`.
pub fn periodic_points(
    c: usize,
    n: usize,
    f: &PotentialFamily,
    lambda: f64,
    cap: usize,
) -> Result<Vec<PeriodicPoint>> {
    check_lambda(lambda)?;
    check_symbol(c, f)?;
    if n == 0 {
        return Err(Error::InvalidParameter("period must be at least 1".into()));
    }
    if n > cap || n > 62 {
        return Err(Error::PeriodCap {
            period: n,
            cap: cap.min(62),
        });
    }
    let den = (1u64 << n) - 1;
    let den_in = den;
    let denom = 1.0 - lambda.powi(n as i32);
    let pts: Vec<PeriodicPoint> = (0..den_in)
        .into_par_iter()
        .map(|k| {
            // T^j x = (2^j k mod den) / den
            let mut orbit = Vec::with_capacity(n);
            let mut num = k;
            for _ in 0..n {
                orbit.push(num);
                num = ((num as u128 * 2) % den_in as u128) as u64;
            }
            let y: f64 = (0..n)
                .map(|i| {
                    let xi = orbit[n - 1 - i] as f64 / den_in as f64;
                    lambda.powi(i as i32) * f.value(c, xi)
                })
                .sum::<f64>()
                / denom;
            PeriodicPoint {
                num: k,
                den: den_in,
                x: CirclePoint::from_ratio(k, den_in),
                y,
            }
        })
        .collect();
    Ok(pts)
}

/// Chaos-game sample of the invariant set from the reference start
/// `(CHAOS_X0, CHAOS_Y0)` with iid uniform controls.
pub fn lambda_cloud_chaos(
    f: &PotentialFamily,
    lambda: f64,
    n_points: usize,
    burn_in: usize,
    seed: u64,
) -> Result<PointCloud> {
    let x0 = CirclePoint::from_f64_with_tail(CHAOS_X0, TailPolicy::Random(seed));
    let ctrl = ControlWord::random(seed, f.len());
    let mut cloud = orbit(&x0, CHAOS_Y0, &ctrl, burn_in + n_points, burn_in, f, lambda)?;
    cloud.meta.source = "chaos".into();
    cloud.meta.seed = Some(seed);
    Ok(cloud)
}

/// Every truncated series of depth `n` over a uniform grid of `grid_n` points.
///
/// Each point is within the tail bound of the invariant set. Together they
/// cover it within that bound plus `(2 / (2 - lambda)) maxLip / (2 grid_n)`.
pub fn lambda_cloud_enumerate(
    f: &PotentialFamily,
    lambda: f64,
    depth: usize,
    grid_n: usize,
    budget: u128,
) -> Result<PointCloud> {
    check_lambda(lambda)?;
    if grid_n == 0 {
        return Err(Error::InvalidParameter(
            "grid must have at least one point".into(),
        ));
    }
    let words = (2 * f.len() as u128).checked_pow(depth as u32);
    let needed = words.and_then(|w| w.checked_mul(grid_n as u128));
    match needed {
        Some(k) if k <= budget => {}
        _ => {
            return Err(Error::BudgetExceeded {
                needed: needed.unwrap_or(u128::MAX),
                budget,
            })
        }
    }

    fn dfs(
        w: BitWindow,
        level: usize,
        depth: usize,
        sum: f64,
        scale: f64,
        x: f64,
        f: &PotentialFamily,
        lambda: f64,
        out: &mut Vec<(f64, f64)>,
    ) {
        if level == depth {
            out.push((x, sum));
            return;
        }
        for a in 0..2 {
            let wa = w.inverse_branch(a);
            let xa = wa.to_f64();
            for c in 0..f.len() {
                let s = sum + scale * f.value(c, xa);
                dfs(wa, level + 1, depth, s, scale * lambda, x, f, lambda, out);
            }
        }
    }

    let points: Vec<(f64, f64)> = (0..grid_n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = i as f64 / grid_n as f64;
            let mut out = Vec::new();
            dfs(
                CirclePoint::from_f64(x).window(),
                0,
                depth,
                0.0,
                1.0,
                x,
                f,
                lambda,
                &mut out,
            );
            out
        })
        .collect();
    let tail = tail_bound(f, lambda, depth);
    let grid_term = 2.0 / (2.0 - lambda) * f.lipschitz().max / (2.0 * grid_n as f64);
    Ok(PointCloud {
        points,
        error_radius: tail + 1e-12,
        meta: CloudMeta {
            source: "enumerate".into(),
            lambda,
            depth: Some(depth),
            grid_n: Some(grid_n),
            coverage_radius: Some(tail + grid_term),
            ..Default::default()
        },
    })
}

/// A point of `X x R x C^N`, with the symbol sequence kept to a finite prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderState {
    pub x: CirclePoint,
    pub y: f64,
    pub b: Vec<usize>,
}

/// Both sides of `G o Psi = Psi o theta` at one input.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyStep {
    pub lhs: CylinderState,
    pub rhs: CylinderState,
    /// Tail bound of `Psi` at the depth used.
    pub tail_bound: f64,
}

impl ConjugacyStep {
    /// `y` discrepancy, or `None` when the exact components disagree.
    pub fn discrepancy(&self) -> Option<f64> {
        (self.lhs.x == self.rhs.x && self.lhs.b == self.rhs.b)
            .then(|| (self.lhs.y - self.rhs.y).abs())
    }
}

/// Evaluates `G(Psi(x, a, c, b))` and `Psi(theta(x, a, c, b))` with `Psi`
/// truncated at `depth`. `b` lists `(b_{-1}, b_{-2}, ...)`.
pub fn conjugacy_step(
    x: &CirclePoint,
    a: &SymbolStream,
    c: &SymbolStream,
    b: &SymbolStream,
    f: &PotentialFamily,
    lambda: f64,
    depth: usize,
) -> Result<ConjugacyStep> {
    let ctrl = ControlWord::new(c.clone(), a.clone());
    let b_prefix = b.take(depth + 1)?;
    let b1 = b_prefix[0];
    check_symbol(b1, f)?;

    // G(x, y, b) = (T x, A_{b_{-1}}(x) + lambda y, sigma b)
    let (s, _) = partial_s(x, &ctrl, depth, f, lambda)?;
    let lhs = CylinderState {
        x: x.double(),
        y: f.eval(b1, x)? + lambda * s,
        b: b_prefix[1..].to_vec(),
    };

    // theta(x, a, c, b) = (T x, pi(x) * a, b_{-1} * c, sigma b)
    let tx = x.double();
    let theta_ctrl = ControlWord::new(c.prepended(b1), a.prepended(x.address() as usize));
    let (s_theta, _) = partial_s(&tx, &theta_ctrl, depth, f, lambda)?;
    let rhs = CylinderState {
        x: tx,
        y: s_theta,
        b: b_prefix[1..].to_vec(),
    };
    Ok(ConjugacyStep {
        lhs,
        rhs,
        tail_bound: tail_bound(f, lambda, depth),
    })
}

/// Orbit of the exact point `1/3` under `G_{c_0}, G_{c_1}, ...`: `n + 1`
/// states including the start.
pub fn nonattractor_trace(
    y0: f64,
    c: &SymbolStream,
    n: usize,
    f: &PotentialFamily,
    lambda: f64,
) -> Result<Vec<(CirclePoint, f64)>> {
    check_lambda(lambda)?;
    let cs = c.take(n)?;
    let mut state = (CirclePoint::from_ratio(1, 3), y0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(state.clone());
    for ci in cs {
        state = apply_skew(&state.0, state.1, ci, f, lambda)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// `F(C) = union_c G_c(C)`. A point within `eps` of the invariant set in `y`
/// maps to one within `lambda eps`.
pub fn hutchinson_image(
    cloud: &PointCloud,
    f: &PotentialFamily,
    lambda: f64,
) -> Result<PointCloud> {
    check_lambda(lambda)?;
    let points = cloud
        .points
        .par_iter()
        .flat_map_iter(|&(x, y)| {
            let tx = {
                let d = 2.0 * x;
                if d >= 1.0 {
                    d - 1.0
                } else {
                    d
                }
            };
            (0..f.len()).map(move |c| (tx, f.value(c, x) + lambda * y))
        })
        .collect();
    let mut meta = cloud.meta.clone();
    meta.source = format!("image of {}", cloud.meta.source);
    Ok(PointCloud {
        points,
        error_radius: lambda * cloud.error_radius + 1e-12,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    const L: f64 = 0.48;

    fn qt() -> PotentialFamily {
        PotentialFamily::quad_tent()
    }

    #[test]
    fn apply_skew_examples() {
        let (x, y) = apply_skew(&CirclePoint::from_f64(0.25), 0.0, 0, &qt(), L).unwrap();
        assert_eq!(x.to_f64(), 0.5);
        assert_eq!(y, 0.0625);

        let k = PotentialFamily::constant(1.3);
        let ystar = 1.3 / (1.0 - L);
        let (_, y) = apply_skew(&CirclePoint::from_f64(0.7), ystar, 0, &k, L).unwrap();
        assert!((y - ystar).abs() < 1e-15);

        let (x, y) = apply_skew(&CirclePoint::from_ratio(1, 3), 0.5, 1, &qt(), L).unwrap();
        assert_eq!(x.exact_ratio(), Some((2, 3)));
        assert!((y - (2.0 / 3.0 + L * 0.5)).abs() < 1e-15);
        assert!(apply_skew(&x, 0.0, 0, &qt(), 1.0).is_err());
    }

    #[test]
    fn symbol_streams() {
        let r = SymbolStream::random(7, 0, 3);
        let head = r.take(50).unwrap();
        assert!(head.iter().all(|&s| s < 3));
        for (i, &s) in head.iter().enumerate() {
            assert_eq!(r.get(i).unwrap(), s);
        }
        let mut sh = r.clone();
        sh.shift().unwrap();
        assert_eq!(sh.take(49).unwrap(), head[1..].to_vec());
        let pre = sh.prepended(head[0]);
        assert_eq!(pre.take(50).unwrap(), head);
        assert_ne!(SymbolStream::random(7, 1, 3).take(50).unwrap(), head);

        let fin = SymbolStream::finite(vec![1, 0]);
        assert!(matches!(
            fin.take(3),
            Err(Error::PrefixExhausted {
                available: 2,
                requested: 3
            })
        ));
        assert_eq!(
            SymbolStream::repeat(vec![1, 0]).take(5).unwrap(),
            vec![1, 0, 1, 0, 1]
        );
    }

    #[test]
    fn orbit_const_zero_decays() {
        let z = PotentialFamily::constant(0.0);
        let cloud = orbit(
            &CirclePoint::lebesgue(3),
            0.9,
            &ControlWord::constant(0, 0),
            200,
            60,
            &z,
            L,
        )
        .unwrap();
        assert_eq!(cloud.len(), 140);
        assert!(cloud.points.iter().all(|p| p.1.abs() < 1e-15));
    }

    #[test]
    fn orbit_stays_in_annulus() {
        let f = qt();
        let y0 = 5.0;
        let t0 = annulus_bound(&f, L).unwrap();
        let cloud = orbit(
            &CirclePoint::lebesgue(1),
            y0,
            &ControlWord::random(1, 2),
            2000,
            0,
            &f,
            L,
        )
        .unwrap();
        assert!(cloud.points.iter().all(|p| p.1.abs() < t0 + y0));
        // absorbed after the predicted number of steps
        let n = absorption_steps(y0, &f, L).unwrap();
        assert!(cloud.points[n..].iter().all(|p| p.1.abs() < t0));
        assert!(orbit(
            &CirclePoint::zero(),
            0.0,
            &ControlWord::constant(0, 0),
            5,
            5,
            &f,
            L
        )
        .is_err());
    }

    #[test]
    fn partial_s_examples() {
        let k = PotentialFamily::constant(2.0);
        let (v, e) = partial_s(
            &CirclePoint::from_f64(0.3),
            &ControlWord::constant(0, 1),
            17,
            &k,
            L,
        )
        .unwrap();
        assert!((v - 2.0 * (1.0 - L.powi(17)) / (1.0 - L)).abs() < 1e-13);
        assert!((e - L.powi(17) * 2.0 / (1.0 - L)).abs() < 1e-15);

        let (v, e) = partial_s(
            &CirclePoint::zero(),
            &ControlWord::constant(0, 0),
            0,
            &qt(),
            L,
        )
        .unwrap();
        assert_eq!(v, 0.0);
        assert!((e - 1.0 / (1.0 - L)).abs() < 1e-15);

        // brute-force oracle: x_i -> (x_i + 1)/2 from 0 approaches 1
        let ctrl = ControlWord::constant(1, 1);
        let (v, e) = partial_s(&CirclePoint::zero(), &ctrl, 30, &qt(), L).unwrap();
        let mut x = 0.0f64;
        let mut oracle = 0.0;
        for i in 0..200 {
            x = (x + 1.0) / 2.0;
            let xm = if x >= 1.0 { 0.0 } else { x };
            oracle += L.powi(i) * if xm <= 0.5 { 2.0 * xm } else { 2.0 - 2.0 * xm };
        }
        assert!((v - oracle).abs() < 1e-8);
        assert!((v - oracle).abs() <= e);

        assert!(matches!(
            partial_s(
                &CirclePoint::zero(),
                &ControlWord::finite(vec![0; 3], vec![0; 3]),
                4,
                &qt(),
                L
            ),
            Err(Error::PrefixExhausted { .. })
        ));
        assert!(matches!(
            partial_s(
                &CirclePoint::zero(),
                &ControlWord::constant(2, 0),
                4,
                &qt(),
                L
            ),
            Err(Error::IndexOutOfRange { symbol: 2, size: 2 })
        ));
    }

    #[test]
    fn depth_from_tolerance() {
        let f = qt();
        let n = depth_for_tol(&f, L, 1e-10);
        assert!(tail_bound(&f, L, n) <= 1e-10);
        assert!(tail_bound(&f, L, n - 1) > 1e-10);
        assert_eq!(depth_for_tol(&PotentialFamily::constant(0.0), L, 1e-10), 0);
    }

    #[test]
    fn cocycle_constant_and_bound() {
        let k = PotentialFamily::constant(0.7);
        let r = cocycle_check(
            &CirclePoint::lebesgue(4),
            0,
            &ControlWord::random(4, 1),
            40,
            &k,
            L,
        )
        .unwrap();
        assert!(r < 1e-12);
        let bound = 2.0 * L.powi(40) / 0.52 + 1e-10;
        for seed in 0..100 {
            let x = CirclePoint::lebesgue(seed);
            let r = cocycle_check(
                &x,
                (seed % 2) as usize,
                &ControlWord::random(seed, 2),
                40,
                &qt(),
                L,
            )
            .unwrap();
            assert!(r <= bound, "seed {seed}: {r}");
        }
    }

    #[test]
    fn annulus_values() {
        assert!((annulus_bound(&qt(), L).unwrap() - 1.0 / 0.52).abs() < 1e-8);
        assert!(annulus_bound(&qt(), L).unwrap() > 1.0 / 0.52);
        assert!(
            (annulus_bound(&PotentialFamily::constant(-3.0), L).unwrap() - 3.0 / 0.52).abs() < 1e-8
        );
        assert_eq!(
            annulus_bound(&PotentialFamily::constant(0.0), L).unwrap(),
            0.0
        );
        // one step maps the closed annulus strictly inside
        let f = qt();
        let t0 = annulus_bound(&f, L).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x: f64 = rng.gen();
            let y = if rng.gen() { t0 } else { -t0 };
            for c in 0..2 {
                assert!((f.value(c, x) + L * y).abs() < t0);
            }
        }
    }

    #[test]
    fn periodic_point_examples() {
        let f = qt();
        let p1 = periodic_points(0, 1, &f, L, DEFAULT_PERIOD_CAP).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0].x.to_f64(), 0.0);
        assert!((p1[0].y - 0.25 / 0.52).abs() < 1e-15);

        let p2 = periodic_points(1, 2, &f, L, DEFAULT_PERIOD_CAP).unwrap();
        let xs: Vec<_> = p2.iter().map(|p| p.x.exact_ratio().unwrap()).collect();
        assert_eq!(xs, vec![(0, 1), (1, 3), (2, 3)]);

        let k = PotentialFamily::constant(0.4);
        for p in periodic_points(0, 5, &k, L, DEFAULT_PERIOD_CAP).unwrap() {
            assert!((p.y - 0.4 / 0.52).abs() < 1e-14);
        }
        assert!(matches!(
            periodic_points(0, 21, &f, L, DEFAULT_PERIOD_CAP),
            Err(Error::PeriodCap {
                period: 21,
                cap: 20
            })
        ));
    }

    #[test]
    fn periodic_points_are_fixed() {
        let f = qt();
        for n in 1..=8 {
            for c in 0..2 {
                for p in periodic_points(c, n, &f, L, DEFAULT_PERIOD_CAP).unwrap() {
                    let (mut x, mut y) = (p.x.clone(), p.y);
                    for _ in 0..n {
                        (x, y) = apply_skew(&x, y, c, &f, L).unwrap();
                    }
                    assert_eq!(x, p.x);
                    assert!((y - p.y).abs() < 1e-9);
                    assert!(p.y.abs() <= f.sup_norm().per_member[c] / (1.0 - L) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn chaos_cloud_constant_and_radius() {
        let k = PotentialFamily::constant(1.1);
        let cloud = lambda_cloud_chaos(&k, L, 500, 100, 5).unwrap();
        assert_eq!(cloud.len(), 500);
        assert!(cloud.points.iter().all(|p| (p.1 - 1.1 / 0.52).abs() < 1e-9));
        let cloud = lambda_cloud_chaos(&qt(), L, 1000, 1000, 2).unwrap();
        assert!(cloud.error_radius < 1e-11);
        assert_eq!(cloud.meta.seed, Some(2));
        assert_eq!(cloud, lambda_cloud_chaos(&qt(), L, 1000, 1000, 2).unwrap());
    }

    #[test]
    fn enumeration_small_cases() {
        let k = PotentialFamily::constant(0.5);
        let cloud = lambda_cloud_enumerate(&k, L, 6, 8, DEFAULT_WORD_BUDGET).unwrap();
        assert_eq!(cloud.len(), 8 * 64);
        let want = 0.5 * (1.0 - L.powi(6)) / (1.0 - L);
        assert!(cloud.points.iter().all(|p| (p.1 - want).abs() < 1e-14));

        let f = qt();
        let cloud = lambda_cloud_enumerate(&f, L, 1, 16, DEFAULT_WORD_BUDGET).unwrap();
        assert_eq!(cloud.len(), 64);
        for (chunk, i) in cloud.points.chunks(4).zip(0..) {
            let x = i as f64 / 16.0;
            let mut want = vec![];
            for a in 0..2 {
                let xa = (x + a as f64) / 2.0;
                for c in 0..2 {
                    want.push(f.value(c, xa));
                }
            }
            let got: Vec<f64> = chunk.iter().map(|p| p.1).collect();
            assert_eq!(got, want);
        }
        assert!((cloud.error_radius - L / 0.52).abs() < 1e-9);
        assert!(matches!(
            lambda_cloud_enumerate(&f, L, 12, 256, DEFAULT_WORD_BUDGET),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn conjugacy_examples() {
        let k = PotentialFamily::constant(0.3);
        let step = conjugacy_step(
            &CirclePoint::lebesgue(1),
            &SymbolStream::random(1, 1, 2),
            &SymbolStream::constant(0),
            &SymbolStream::constant(0),
            &k,
            L,
            40,
        )
        .unwrap();
        assert!(step.discrepancy().unwrap() < 1e-12 + step.tail_bound * 2.0);

        let step = conjugacy_step(
            &CirclePoint::from_ratio(1, 3),
            &SymbolStream::repeat(vec![0, 1]),
            &SymbolStream::random(3, 0, 2),
            &SymbolStream::with_prefix(&[0], SymbolStream::random(3, 2, 2)),
            &qt(),
            L,
            40,
        )
        .unwrap();
        assert!(step.discrepancy().unwrap() <= 2.0 * step.tail_bound);
        assert_eq!(step.lhs.x.exact_ratio(), Some((2, 3)));
    }

    #[test]
    fn nonattractor_alternates() {
        let f = qt();
        for y0 in [1.4, 0.0] {
            let tr = nonattractor_trace(y0, &SymbolStream::random(11, 0, 2), 2000, &f, L).unwrap();
            assert_eq!(tr.len(), 2001);
            for (i, (x, _)) in tr.iter().enumerate() {
                let want = if i % 2 == 0 { (1, 3) } else { (2, 3) };
                assert_eq!(x.exact_ratio(), Some(want));
            }
        }
    }

    #[test]
    fn hutchinson_maps_pointwise() {
        let f = qt();
        let cloud = lambda_cloud_chaos(&f, L, 50, 100, 0).unwrap();
        let img = hutchinson_image(&cloud, &f, L).unwrap();
        assert_eq!(img.len(), 100);
        let (x, y) = cloud.points[3];
        assert_eq!(img.points[6], ((2.0 * x) % 1.0, f.value(0, x) + L * y));
        assert_eq!(img.points[7].1, f.value(1, x) + L * y);
    }

    #[test]
    fn series_is_lipschitz_in_x() {
        let f = qt();
        // with a fixed branch word the inverse branches jump at the seam, so
        // the bound holds for the linear metric of [0, 1)
        let bound = 2.0 / (2.0 - L) * f.lipschitz().max + 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for s in 0..300 {
            let ctrl = ControlWord::random(s, 2);
            let x: f64 = rng.gen();
            let x2 = (x + rng.gen_range(-0.05..0.05f64)).clamp(0.0, 0.999_999);
            let d = (x - x2).abs();
            if d < 1e-9 {
                continue;
            }
            let (s1, _) = partial_s(&CirclePoint::from_f64(x), &ctrl, 40, &f, L).unwrap();
            let (s2, _) = partial_s(&CirclePoint::from_f64(x2), &ctrl, 40, &f, L).unwrap();
            assert!(
                (s1 - s2).abs() / d <= bound,
                "ratio {}",
                (s1 - s2).abs() / d
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn cocycle_fuzz(seed in any::<u64>(), b in 0usize..2, n in 0usize..60, lam in 0.05f64..0.95) {
            let f = qt();
            let r = cocycle_check(&CirclePoint::lebesgue(seed), b, &ControlWord::random(seed, 2), n, &f, lam).unwrap();
            prop_assert!(r <= 2.0 * tail_bound(&f, lam, n) + 1e-10);
        }
    }
}
