//! Exact arithmetic on the circle `X = R/Z` under the doubling map.
//!
//! A point is a most-significant-first stream of binary digits
//! `x = sum b_i 2^-(i+1)`. A finite prefix is materialized; digits past it are
//! supplied by a tail policy: all zeros, an eventually periodic pattern
//! (rationals), or iid fair bits from a seeded stream (a Lebesgue-typical
//! point). `T(x) = 2x mod 1` drops the leading digit and the inverse branch
//! `tau_a(x) = (x + a) / 2` prepends digit `a`, so neither ever rounds.
//! Naive `(2.0 * x) % 1.0` collapses to zero after about 53 steps.

use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A symbol of the inverse-branch alphabet `{0, 1}`.
pub type Branch = u8;

const WORD_BITS: usize = 64;
const COMPACT_AFTER: usize = 64 * WORD_BITS;

/// Growable bit deque, most significant bit of each word first.
#[derive(Clone, Default)]
struct BitBuf {
    words: Vec<u64>,
    head: usize,
    len: usize,
}

impl BitBuf {
    fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        let p = self.head + i;
        (self.words[p / WORD_BITS] >> (WORD_BITS - 1 - p % WORD_BITS)) & 1 == 1
    }

    fn set_physical(&mut self, p: usize, bit: bool) {
        let mask = 1u64 << (WORD_BITS - 1 - p % WORD_BITS);
        if bit {
            self.words[p / WORD_BITS] |= mask;
        } else {
            self.words[p / WORD_BITS] &= !mask;
        }
    }

    fn push_back(&mut self, bit: bool) {
        let p = self.head + self.len;
        if p / WORD_BITS >= self.words.len() {
            self.words.push(0);
        }
        self.set_physical(p, bit);
        self.len += 1;
    }

    fn push_front(&mut self, bit: bool) {
        if self.head == 0 {
            self.words.insert(0, 0);
            self.head = WORD_BITS;
        }
        self.head -= 1;
        self.set_physical(self.head, bit);
        self.len += 1;
    }

    fn pop_front(&mut self) -> Option<bool> {
        if self.len == 0 {
            return None;
        }
        let bit = self.get(0);
        self.head += 1;
        self.len -= 1;
        if self.head >= COMPACT_AFTER {
            let k = self.head / WORD_BITS;
            self.words.drain(..k);
            self.head -= k * WORD_BITS;
        }
        Some(bit)
    }

    fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

/// How digits beyond the materialized prefix are produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailPolicy {
    /// A dyadic rational: every further digit is 0.
    Zeros,
    /// The pattern repeats forever (must be non-empty).
    Periodic(Vec<bool>),
    /// iid fair bits from a ChaCha8 stream with this seed.
    Random(u64),
}

#[derive(Clone)]
enum Tail {
    Zeros,
    Periodic {
        pattern: Vec<bool>,
        phase: usize,
    },
    Random {
        seed: u64,
        rng: ChaCha8Rng,
        spare: u64,
        spare_len: u32,
        drawn: u64,
    },
}

impl Tail {
    fn from_policy(policy: TailPolicy) -> Self {
        match policy {
            TailPolicy::Zeros => Tail::Zeros,
            TailPolicy::Periodic(pattern) => {
                assert!(!pattern.is_empty(), "periodic tail needs a pattern");
                if pattern.iter().all(|b| !b) {
                    Tail::Zeros
                } else {
                    Tail::Periodic { pattern, phase: 0 }
                }
            }
            TailPolicy::Random(seed) => Tail::Random {
                seed,
                rng: ChaCha8Rng::seed_from_u64(seed),
                spare: 0,
                spare_len: 0,
                drawn: 0,
            },
        }
    }

    fn next_bit(&mut self) -> bool {
        match self {
            Tail::Zeros => false,
            Tail::Periodic { pattern, phase } => {
                let bit = pattern[*phase];
                *phase = (*phase + 1) % pattern.len();
                bit
            }
            Tail::Random {
                rng,
                spare,
                spare_len,
                drawn,
                ..
            } => {
                if *spare_len == 0 {
                    *spare = rng.next_u64();
                    *spare_len = 64;
                }
                let bit = *spare >> 63 == 1;
                *spare <<= 1;
                *spare_len -= 1;
                *drawn += 1;
                bit
            }
        }
    }

    fn policy(&self) -> TailPolicy {
        match self {
            Tail::Zeros => TailPolicy::Zeros,
            Tail::Periodic { pattern, phase } => {
                let mut p = pattern[*phase..].to_vec();
                p.extend_from_slice(&pattern[..*phase]);
                TailPolicy::Periodic(p)
            }
            Tail::Random { seed, .. } => TailPolicy::Random(*seed),
        }
    }
}

impl PartialEq for Tail {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Tail::Zeros, Tail::Zeros) => true,
            (
                Tail::Periodic {
                    pattern: p,
                    phase: i,
                },
                Tail::Periodic {
                    pattern: q,
                    phase: j,
                },
            ) => p == q && i == j,
            (
                Tail::Random {
                    seed: s, drawn: d, ..
                },
                Tail::Random {
                    seed: t, drawn: e, ..
                },
            ) => s == t && d == e,
            _ => false,
        }
    }
}

/// A point of the circle held as exact binary digits.
#[derive(Clone)]
pub struct CirclePoint {
    bits: BitBuf,
    tail: Tail,
}

impl CirclePoint {
    pub fn new<I: IntoIterator<Item = bool>>(prefix: I, tail: TailPolicy) -> Self {
        let mut bits = BitBuf::default();
        for b in prefix {
            bits.push_back(b);
        }
        CirclePoint {
            bits,
            tail: Tail::from_policy(tail),
        }
    }

    pub fn zero() -> Self {
        Self::new([], TailPolicy::Zeros)
    }

    /// A Lebesgue-distributed point: no prefix, every digit an independent fair bit.
    pub fn lebesgue(seed: u64) -> Self {
        Self::new([], TailPolicy::Random(seed))
    }

    /// The exact binary expansion of `x mod 1` followed by `tail`.
    pub fn from_f64_with_tail(x: f64, tail: TailPolicy) -> Self {
        let mut r = x.rem_euclid(1.0);
        if r >= 1.0 {
            r = 0.0;
        }
        let mut prefix = Vec::new();
        // every f64 in [0,1) is a dyadic rational, so this terminates
        while r != 0.0 {
            r *= 2.0;
            if r >= 1.0 {
                prefix.push(true);
                r -= 1.0;
            } else {
                prefix.push(false);
            }
        }
        Self::new(prefix, tail)
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_f64_with_tail(x, TailPolicy::Zeros)
    }

    /// Exact point `num/den mod 1` with an eventually periodic expansion.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let den = den as u128;
        let mut r = num as u128 % den;
        let mut digits = Vec::new();
        let mut seen: HashMap<u128, usize> = HashMap::new();
        while r != 0 {
            if let Some(&start) = seen.get(&r) {
                let pattern = digits.split_off(start);
                return Self::new(digits, TailPolicy::Periodic(pattern));
            }
            seen.insert(r, digits.len());
            r *= 2;
            if r >= den {
                digits.push(true);
                r -= den;
            } else {
                digits.push(false);
            }
        }
        Self::new(digits, TailPolicy::Zeros)
    }

    /// Number of digits currently materialized.
    pub fn precision(&self) -> usize {
        self.bits.len
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail.policy()
    }

    /// Materializes digits until at least `k` are stored.
    pub fn materialize(&mut self, k: usize) {
        while self.bits.len < k {
            let b = self.tail.next_bit();
            self.bits.push_back(b);
        }
    }

    /// The first `k <= 64` digits packed most significant first into a `u64`,
    /// read without materializing anything.
    fn peek_bits(&self, k: usize) -> u64 {
        debug_assert!(k <= 64);
        let mut w = 0u64;
        let stored = self.bits.len.min(k);
        for i in 0..stored {
            w = (w << 1) | self.bits.get(i) as u64;
        }
        if stored < k {
            let mut tail = self.tail.clone();
            for _ in stored..k {
                w = (w << 1) | tail.next_bit() as u64;
            }
        }
        if k < 64 {
            w <<= 64 - k;
        }
        w
    }

    /// Digit `i` (0-based, most significant first).
    pub fn digit(&self, i: usize) -> bool {
        if i < self.bits.len {
            return self.bits.get(i);
        }
        let mut tail = self.tail.clone();
        for _ in self.bits.len..i {
            tail.next_bit();
        }
        tail.next_bit()
    }

    /// The leading 64 digits as a fixed-point window.
    pub fn window(&self) -> BitWindow {
        BitWindow(self.peek_bits(64))
    }

    /// Float value from the first 53 digits. Any 53-digit dyadic in `[0,1)`
    /// is exactly representable, so no rounding happens here.
    pub fn to_f64(&self) -> f64 {
        self.window().to_f64()
    }

    /// The address `pi(x)`: the leading digit, i.e. the branch with `tau_e(T(x)) = x`.
    pub fn address(&self) -> Branch {
        self.digit(0) as Branch
    }

    /// `T(x) = 2x mod 1` as a new point.
    pub fn double(&self) -> Self {
        let mut p = self.clone();
        p.double_in_place();
        p
    }

    /// Shifts the digit stream left by one, returning the discarded digit.
    pub fn double_in_place(&mut self) -> Branch {
        match self.bits.pop_front() {
            Some(b) => b as Branch,
            None => self.tail.next_bit() as Branch,
        }
    }

    /// `tau_a(x) = (x + a) / 2` as a new point.
    pub fn inverse_branch(&self, a: Branch) -> Self {
        let mut p = self.clone();
        p.push_branch(a);
        p
    }

    /// Prepends digit `a`.
    pub fn push_branch(&mut self, a: Branch) {
        assert!(a <= 1, "branch symbol must be 0 or 1, got {a}");
        self.bits.push_front(a == 1);
    }

    /// Exact value as a reduced fraction when the tail is not random and the
    /// expansion is short enough to fit in `u128`.
    pub fn exact_ratio(&self) -> Option<(u128, u128)> {
        let k = self.bits.len;
        let prefix = || {
            self.bits
                .iter()
                .fold(0u128, |acc, b| (acc << 1) | b as u128)
        };
        let (num, den) = match &self.tail {
            Tail::Random { .. } => return None,
            Tail::Zeros => {
                if k > 120 {
                    return None;
                }
                (prefix(), 1u128 << k)
            }
            Tail::Periodic { pattern, phase } => {
                let p = pattern.len();
                if k + p > 120 {
                    return None;
                }
                let rep = (0..p)
                    .map(|j| pattern[(phase + j) % p])
                    .fold(0u128, |acc, b| (acc << 1) | b as u128);
                let cyc = (1u128 << p) - 1;
                (prefix() * cyc + rep, cyc << k)
            }
        };
        let g = num.gcd(&den);
        let (n, d) = (num / g, den / g);
        // 1 = 0.111... on the circle
        if n == d {
            Some((0, 1))
        } else {
            Some((n, d))
        }
    }
}

impl PartialEq for CirclePoint {
    /// Equal when both digit streams agree: the digits up to the longer
    /// materialized prefix match and the tail generators are then in the same state.
    fn eq(&self, other: &Self) -> bool {
        let k = self.bits.len.max(other.bits.len);
        if (0..k).any(|i| self.digit(i) != other.digit(i)) {
            return false;
        }
        let advanced = |p: &CirclePoint| {
            let mut t = p.tail.clone();
            for _ in p.bits.len..k {
                t.next_bit();
            }
            t
        };
        advanced(self) == advanced(other)
    }
}

impl fmt::Debug for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: String = self
            .bits
            .iter()
            .take(64)
            .map(|b| if b { '1' } else { '0' })
            .collect();
        let ellipsis = if self.bits.len > 64 { "..." } else { "" };
        let tail = match &self.tail {
            Tail::Zeros => "0*".to_string(),
            Tail::Periodic { .. } => match self.tail.policy() {
                TailPolicy::Periodic(p) => {
                    let s: String = p.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    format!("({s})*")
                }
                _ => unreachable!(),
            },
            Tail::Random { seed, drawn, .. } => format!("random(seed={seed}, drawn={drawn})"),
        };
        write!(f, "CirclePoint(0.{digits}{ellipsis} | {tail})")
    }
}

/// The leading 64 digits of a point as a `u64` fixed-point number.
///
/// Inverse branches shift a digit in at the top, which keeps the first 53
/// digits exact for any number of applications.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitWindow(pub u64);

impl BitWindow {
    /// First 64 digits of `x mod 1`.
    #[inline]
    pub fn from_f64(x: f64) -> Self {
        let r = x.rem_euclid(1.0);
        // scaling by a power of two is exact; the cast truncates below 2^-64
        BitWindow(if r >= 1.0 {
            0
        } else {
            (r * 18446744073709551616.0) as u64
        })
    }

    #[inline]
    pub fn inverse_branch(self, a: Branch) -> Self {
        BitWindow((self.0 >> 1) | ((a as u64) << 63))
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        (self.0 >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn address(self) -> Branch {
        (self.0 >> 63) as Branch
    }
}

/// Quotient metric `min(|x - y|, 1 - |x - y|)`.
pub fn circle_distance(p: &CirclePoint, q: &CirclePoint) -> f64 {
    distance(p.to_f64(), q.to_f64())
}

/// Circle distance between float coordinates.
#[inline]
pub fn distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs() % 1.0;
    d.min(1.0 - d)
}
