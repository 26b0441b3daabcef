//! Monte Carlo for the random SRB measure `Psi(l x eta x nu^2)` and the time
//! averages it governs.
//!
//! A sample draws `x` from Lebesgue measure as 64 fair digits, `a` iid fair
//! bits, `c` and `b` iid uniform over the potentials, and maps them to
//! `(x, S_x(c, a), b)`.

use std::fmt;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::{solve_value, Sign};
use crate::circle::{BitWindow, CirclePoint, TailPolicy};
use crate::ergopt::cycle_oracle;
use crate::error::{check_lambda, Error, Result};
use crate::potentials::PotentialFamily;
use crate::skew::{depth_for_tol, tail_bound, SymbolStream};

/// Samples per deterministic work unit; each unit owns one RNG stream.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrbEstimate {
    pub statistic: String,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    /// Deterministic truncation bias, reported apart from `std_error`.
    pub bias_bound: f64,
    pub n_samples: usize,
    pub depth: usize,
    pub seed: u64,
}

/// Signature of a user observable `g(x, y, b_{-1})`.
pub type ObservableFn = dyn Fn(f64, f64, usize) -> f64 + Send + Sync;

/// What to average over the SRB measure.
#[derive(Clone)]
pub enum Observable {
    /// The fibre coordinate `y`.
    Y,
    /// `A_{b_{-1}}(x)`
    PotentialAtPast,
    /// `g(x, y, b_{-1})`, Lipschitz in `y` with constant `lip_y` (used for the
    /// truncation bias).
    Function {
        name: String,
        lip_y: f64,
        g: Arc<ObservableFn>,
    },
}

impl Observable {
    pub fn function<G>(name: &str, lip_y: f64, g: G) -> Self
    where
        G: Fn(f64, f64, usize) -> f64 + Send + Sync + 'static,
    {
        Observable::Function {
            name: name.to_string(),
            lip_y,
            g: Arc::new(g),
        }
    }

    fn name(&self) -> String {
        match self {
            Observable::Y => "y".into(),
            Observable::PotentialAtPast => "A_b(x)".into(),
            Observable::Function { name, .. } => name.clone(),
        }
    }

    fn lip_y(&self) -> f64 {
        match self {
            Observable::Y => 1.0,
            Observable::PotentialAtPast => 0.0,
            Observable::Function { lip_y, .. } => *lip_y,
        }
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name())
    }
}

/// Streaming count, mean and centred second moment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Pairwise combination of two disjoint samples.
    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

#[inline]
fn uniform_index(rng: &mut ChaCha8Rng, m: usize) -> usize {
    ((rng.next_u64() as u128 * m as u128) >> 64) as usize
}

/// One draw of `(x, S_x(c, a), b_{-1})` at the given depth.
fn draw_sample(
    rng: &mut ChaCha8Rng,
    f: &PotentialFamily,
    lambda: f64,
    depth: usize,
) -> (f64, f64, usize) {
    let x = BitWindow(rng.next_u64());
    let m = f.len();
    let mut w = x;
    let mut y = 0.0;
    let mut scale = 1.0;
    let mut abits = 0u64;
    for i in 0..depth {
        if i % 64 == 0 {
            abits = rng.next_u64();
        }
        let a = ((abits >> (i % 64)) & 1) as u8;
        let c = uniform_index(rng, m);
        w = w.inverse_branch(a);
        y += scale * f.value(c, w.to_f64());
        scale *= lambda;
    }
    let b = uniform_index(rng, m);
    (x.to_f64(), y, b)
}

/// Estimates `int g dmu` by `n_samples` independent draws, with the series
/// truncated where its tail drops below `tol`. Chunks of samples use their own
/// RNG streams, so the result does not depend on the number of workers.
pub fn sample_srb(
    f: &PotentialFamily,
    lambda: f64,
    g: &Observable,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<SrbEstimate> {
    check_lambda(lambda)?;
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let depth = match g {
        Observable::PotentialAtPast => 0,
        _ => depth_for_tol(f, lambda, tol),
    };
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = CHUNK.min(n_samples - k * CHUNK);
            let mut mom = Moments::default();
            for _ in 0..count {
                let (x, y, b) = draw_sample(&mut rng, f, lambda, depth);
                let v = match g {
                    Observable::Y => y,
                    Observable::PotentialAtPast => f.value(b, x),
                    Observable::Function { g, .. } => g(x, y, b),
                };
                mom.push(v);
            }
            mom
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(SrbEstimate {
        statistic: g.name(),
        mean: total.mean,
        std_error: total.std_error(),
        bias_bound: g.lip_y() * tail_bound(f, lambda, depth),
        n_samples,
        depth,
        seed,
    })
}

/// Time average along one typical orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialAverage {
    pub average: f64,
    /// Batch-means standard error of the average.
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub lambda: f64,
    pub n_steps: usize,
    pub trials: Vec<TrialAverage>,
    /// `(1 - lambda) int y dmu`
    pub reference: f64,
    pub reference_sigma: f64,
    /// Deterministic offset allowed on top of the statistical band: the
    /// series truncation and the `1/N` from averaging `N - 1` terms.
    pub bias: f64,
}

impl BirkhoffReport {
    /// Half-width of the 3-sigma band for one trial.
    pub fn band(&self, t: &TrialAverage) -> f64 {
        3.0 * (t.sigma * t.sigma + self.reference_sigma * self.reference_sigma).sqrt() + self.bias
    }

    pub fn outliers(&self) -> usize {
        self.trials
            .iter()
            .filter(|t| (t.average - self.reference).abs() > self.band(t))
            .count()
    }
}

const BATCHES: usize = 50;

/// `(1/N) sum_{j=1}^{N-1} A_{b_{-j}}(T^{j-1} x)` for a Lebesgue-random `x`
/// (exact digit shifts) and iid `b`.
fn birkhoff_trial(f: &PotentialFamily, n_steps: usize, seed: u64, trial: u64) -> TrialAverage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut x = CirclePoint::new([], TailPolicy::Random(rng.next_u64()));
    let b = SymbolStream::random(rng.next_u64(), 0, f.len());
    let bs = b.take(n_steps - 1).expect("unbounded stream");
    let terms = n_steps - 1;
    let per_batch = terms.div_ceil(BATCHES);
    let mut batch_means = Vec::with_capacity(BATCHES);
    let (mut sum, mut batch_sum, mut in_batch) = (0.0, 0.0, 0usize);
    for &bj in &bs {
        x.materialize(64);
        let v = f.value(bj, x.to_f64());
        x.double_in_place();
        sum += v;
        batch_sum += v;
        in_batch += 1;
        if in_batch == per_batch {
            batch_means.push(batch_sum / in_batch as f64);
            batch_sum = 0.0;
            in_batch = 0;
        }
    }
    if in_batch > 0 {
        batch_means.push(batch_sum / in_batch as f64);
    }
    let k = batch_means.len() as f64;
    let mu = batch_means.iter().sum::<f64>() / k;
    let var = batch_means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    TrialAverage {
        average: sum / n_steps as f64,
        sigma: (var / k).sqrt(),
    }
}

/// Runs `n_trials` orbit averages and compares them with
/// `(1 - lambda) sample_srb(y)` drawn from `ref_samples` samples.
pub fn birkhoff_experiment(
    f: &PotentialFamily,
    lambda: f64,
    n_steps: usize,
    n_trials: usize,
    ref_samples: usize,
    seed: u64,
) -> Result<BirkhoffReport> {
    check_lambda(lambda)?;
    if n_steps < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 steps, got {n_steps}"
        )));
    }
    let reference = sample_srb(f, lambda, &Observable::Y, ref_samples, 1e-10, seed)?;
    let trials: Vec<TrialAverage> = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| birkhoff_trial(f, n_steps, seed ^ 0x5eed, t))
        .collect();
    let scale = 1.0 - lambda;
    Ok(BirkhoffReport {
        lambda,
        n_steps,
        trials,
        reference: scale * reference.mean,
        reference_sigma: scale * reference.std_error,
        bias: scale * reference.bias_bound + f.sup_norm().max / n_steps as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageBoundReport {
    pub lambda: f64,
    pub epsilon: f64,
    /// Certified lower end of the critical-value bracket.
    pub oracle: f64,
    /// `(1 - lambda) (max v_lambda + tol)`, the upper end.
    pub bracket_upper: f64,
    pub averages: Vec<f64>,
    /// Trials with average above `bracket_upper + epsilon`.
    pub violations: usize,
}

impl AverageBoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks every orbit average against the upper end of the critical-value
/// bracket plus `epsilon`.
#[allow(clippy::too_many_arguments)]
pub fn average_bound_check(
    f: &PotentialFamily,
    lambda: f64,
    epsilon: f64,
    n_trials: usize,
    n_steps: usize,
    grid_n: usize,
    oracle_len: usize,
    seed: u64,
) -> Result<AverageBoundReport> {
    check_lambda(lambda)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if n_steps < 2 {
        return Err(Error::InvalidParameter("need at least two steps".into()));
    }
    let v = solve_value(f, lambda, Sign::Max, grid_n, 1e-6 / (1.0 - lambda))?;
    let bracket_upper = (1.0 - lambda) * (v.grid.max() + v.tol);
    let oracle = cycle_oracle(f, oracle_len)?.value;
    let averages: Vec<f64> = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| birkhoff_trial(f, n_steps, seed, t).average)
        .collect();
    let violations = averages
        .iter()
        .filter(|&&a| a > bracket_upper + epsilon)
        .count();
    Ok(AverageBoundReport {
        lambda,
        epsilon,
        oracle,
        bracket_upper,
        averages,
        violations,
    })
}
