//! The finite family of Lipschitz potentials `A_c`, `c in {0, ..., m-1}`.
//!
//! Potentials are written in a small DSL, members separated by `;`:
//!
//! ```text
//! quad                       (x - 1/2)^2
//! tent                       2x on [0, 1/2], 2 - 2x on [1/2, 1]
//! const -0.3                 a constant
//! piecewise [0, 0.5] 0 2 [0.5, 1] 2 -2
//! ```
//!
//! A `piecewise` segment `[l, r] c0 c1 ... ck` is the polynomial
//! `c0 + c1 x + ... + ck x^k` on `[l, r]` in the absolute coordinate `x`.
//! Segments must tile `[0, 1]` in order, agree at shared breakpoints and
//! close up across the seam `A(0) = A(1)`.

use std::fmt;

use crate::circle::CirclePoint;
use crate::error::{Error, Result};

const SEAM_TOL: f64 = 1e-12;
const JOINT_TOL: f64 = 1e-9;

/// Dense polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Real roots in `[lo, hi]`, isolated between consecutive critical
    /// points (found recursively) and refined by bisection.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.degree() {
            0 => Vec::new(),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if (lo..=hi).contains(&r) {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut knots = vec![lo];
                knots.extend(self.derivative().roots_in(lo, hi));
                knots.push(hi);
                let mut roots: Vec<f64> = Vec::new();
                for w in knots.windows(2) {
                    let (u, v) = (w[0], w[1]);
                    let (fu, fv) = (self.eval(u), self.eval(v));
                    if fu == 0.0 {
                        roots.push(u);
                    } else if fu.signum() != fv.signum() && fv != 0.0 {
                        roots.push(bisect(|t| self.eval(t), u, v));
                    }
                }
                if self.eval(hi) == 0.0 {
                    roots.push(hi);
                }
                roots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                roots
            }
        }
    }

    /// `max |p|` over `[lo, hi]`, attained at an endpoint or a critical point.
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        self.derivative()
            .roots_in(lo, hi)
            .into_iter()
            .chain([lo, hi])
            .map(|t| self.eval(t).abs())
            .fold(0.0, f64::max)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut u: f64, mut v: f64) -> f64 {
    let su = f(u).signum();
    for _ in 0..200 {
        let m = 0.5 * (u + v);
        if m <= u || m >= v {
            break;
        }
        if f(m).signum() == su {
            u = m;
        } else {
            v = m;
        }
    }
    0.5 * (u + v)
}

/// Polynomial pieces tiling `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piecewise {
    breaks: Vec<f64>,
    pieces: Vec<Polynomial>,
}

impl Piecewise {
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Polynomial] {
        &self.pieces
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        let k = self.breaks[1..self.breaks.len() - 1].partition_point(|&b| b <= x);
        self.pieces[k].eval(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// `(x - 1/2)^2`
    Quad,
    /// `2x` on `[0, 1/2]`, `2 - 2x` on `[1/2, 1]`
    Tent,
    Const(f64),
    Piecewise(Piecewise),
}

impl Potential {
    /// Builds a piecewise potential from `(left, right, coefficients)`
    /// segments, checking tiling and continuity. `index` labels errors.
    pub fn piecewise(index: usize, segments: Vec<(f64, f64, Vec<f64>)>) -> Result<Self> {
        let bad = |detail: String| Error::Breakpoints { index, detail };
        if segments.is_empty() {
            return Err(bad("no segments".into()));
        }
        let mut breaks = vec![segments[0].0];
        let mut pieces = Vec::with_capacity(segments.len());
        if segments[0].0 != 0.0 {
            return Err(bad(format!("first segment starts at {}", segments[0].0)));
        }
        for (i, (l, r, coeffs)) in segments.into_iter().enumerate() {
            if !(l < r) || !l.is_finite() || !r.is_finite() {
                return Err(bad(format!("segment {i} has [{l}, {r}]")));
            }
            if l != *breaks.last().unwrap() {
                return Err(bad(format!(
                    "segment {i} starts at {l}, previous ended at {}",
                    breaks.last().unwrap()
                )));
            }
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(bad(format!("segment {i} needs finite coefficients")));
            }
            breaks.push(r);
            pieces.push(Polynomial::new(coeffs));
        }
        if *breaks.last().unwrap() != 1.0 {
            return Err(bad(format!(
                "last segment ends at {}",
                breaks.last().unwrap()
            )));
        }
        for k in 1..pieces.len() {
            let t = breaks[k];
            let (left, right) = (pieces[k - 1].eval(t), pieces[k].eval(t));
            if (left - right).abs() > JOINT_TOL * left.abs().max(1.0) {
                return Err(Error::InteriorDiscontinuity {
                    index,
                    at: t,
                    left,
                    right,
                });
            }
        }
        let at_zero = pieces[0].eval(0.0);
        let at_one = pieces.last().unwrap().eval(1.0);
        if (at_zero - at_one).abs() > SEAM_TOL {
            return Err(Error::SeamDiscontinuity {
                index,
                at_zero,
                at_one,
            });
        }
        Ok(Potential::Piecewise(Piecewise { breaks, pieces }))
    }

    /// Value at `x`, read modulo 1.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Quad => {
                let d = x - 0.5;
                d * d
            }
            Potential::Tent => {
                if x <= 0.5 {
                    2.0 * x
                } else {
                    2.0 - 2.0 * x
                }
            }
            Potential::Const(k) => *k,
            Potential::Piecewise(p) => p.eval(x),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Potential::Quad => 0.25,
            Potential::Tent => 1.0,
            Potential::Const(k) => k.abs(),
            Potential::Piecewise(p) => p
                .pieces
                .iter()
                .zip(p.breaks.windows(2))
                .map(|(q, w)| q.max_abs_on(w[0], w[1]))
                .fold(0.0, f64::max),
        }
    }

    /// Lipschitz constant for the circle metric. Members are continuous on the
    /// circle, so this is the largest slope over the pieces.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Potential::Quad => 1.0,
            Potential::Tent => 2.0,
            Potential::Const(_) => 0.0,
            Potential::Piecewise(p) => p
                .pieces
                .iter()
                .zip(p.breaks.windows(2))
                .map(|(q, w)| q.derivative().max_abs_on(w[0], w[1]))
                .fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Quad => write!(f, "quad"),
            Potential::Tent => write!(f, "tent"),
            Potential::Const(k) => write!(f, "const {k:?}"),
            Potential::Piecewise(p) => {
                write!(f, "piecewise")?;
                for (q, w) in p.pieces.iter().zip(p.breaks.windows(2)) {
                    write!(f, " [{:?}, {:?}]", w[0], w[1])?;
                    for c in q.coeffs() {
                        write!(f, " {c:?}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Per-member values and their maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct Norms {
    pub per_member: Vec<f64>,
    pub max: f64,
}

impl Norms {
    fn collect<F: Fn(&Potential) -> f64>(members: &[Potential], f: F) -> Self {
        let per_member: Vec<f64> = members.iter().map(f).collect();
        let max = per_member.iter().copied().fold(0.0, f64::max);
        Norms { per_member, max }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialFamily {
    members: Vec<Potential>,
    sup: Norms,
    lip: Norms,
}

impl PotentialFamily {
    pub fn new(members: Vec<Potential>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter(
                "a potential family needs at least one member".into(),
            ));
        }
        for (index, m) in members.iter().enumerate() {
            if let Potential::Const(k) = m {
                if !k.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "potential {index} has non-finite constant {k}"
                    )));
                }
            }
        }
        let sup = Norms::collect(&members, Potential::sup_norm);
        let lip = Norms::collect(&members, Potential::lipschitz);
        Ok(PotentialFamily { members, sup, lip })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).family()
    }

    /// The two-member family `quad; tent`.
    pub fn quad_tent() -> Self {
        Self::new(vec![Potential::Quad, Potential::Tent]).expect("builtin family")
    }

    pub fn constant(k: f64) -> Self {
        Self::new(vec![Potential::Const(k)]).expect("finite constant")
    }

    pub fn members(&self) -> &[Potential] {
        &self.members
    }

    /// `m = |C|`
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn eval(&self, c: usize, x: &CirclePoint) -> Result<f64> {
        self.eval_f64(c, x.to_f64())
    }

    pub fn eval_f64(&self, c: usize, x: f64) -> Result<f64> {
        self.members
            .get(c)
            .map(|p| p.eval(x))
            .ok_or(Error::IndexOutOfRange {
                symbol: c,
                size: self.members.len(),
            })
    }

    /// Unchecked evaluation; panics if `c >= m`.
    #[inline]
    pub fn value(&self, c: usize, x: f64) -> f64 {
        self.members[c].eval(x)
    }

    /// `(argmax_c A_c(x), max_c A_c(x))`, smallest index on ties.
    #[inline]
    pub fn best(&self, x: f64) -> (usize, f64) {
        self.extremum(x, true)
    }

    /// `(argmin_c A_c(x), min_c A_c(x))`, smallest index on ties.
    #[inline]
    pub fn worst(&self, x: f64) -> (usize, f64) {
        self.extremum(x, false)
    }

    fn extremum(&self, x: f64, maximize: bool) -> (usize, f64) {
        let mut best = (0, self.members[0].eval(x));
        for (c, p) in self.members.iter().enumerate().skip(1) {
            let v = p.eval(x);
            if (maximize && v > best.1) || (!maximize && v < best.1) {
                best = (c, v);
            }
        }
        best
    }

    /// Mean over the members, `(1/m) sum_c A_c(x)`.
    pub fn mean(&self, x: f64) -> f64 {
        self.members.iter().map(|p| p.eval(x)).sum::<f64>() / self.len() as f64
    }

    /// `||A_c||_inf` per member and the maximum over `c`.
    pub fn sup_norm(&self) -> &Norms {
        &self.sup
    }

    /// `Lip(A_c)` per member and the maximum over `c`.
    pub fn lipschitz(&self) -> &Norms {
        &self.lip
    }
}

impl fmt::Display for PotentialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    LBracket,
    RBracket,
    Comma,
    Semi,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    peeked: Option<(Tok, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            line: 1,
            col: 1,
            peeked: None,
        }
    }

    fn err<T>(&self, line: usize, column: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.src[self.pos..].chars().next()?;
        self.pos += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(ch)
    }

    fn lex(&mut self) -> Result<(Tok, usize, usize)> {
        while let Some(ch) = self.src[self.pos..].chars().next() {
            if ch.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
        let (line, col) = (self.line, self.col);
        let Some(ch) = self.src[self.pos..].chars().next() else {
            return Ok((Tok::End, line, col));
        };
        let simple = match ch {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(t) = simple {
            self.bump();
            return Ok((t, line, col));
        }
        let start = self.pos;
        if ch.is_ascii_alphabetic() {
            while matches!(self.src[self.pos..].chars().next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
            {
                self.bump();
            }
            return Ok((Tok::Word(self.src[start..self.pos].to_string()), line, col));
        }
        if ch.is_ascii_digit() || matches!(ch, '+' | '-' | '.') {
            self.bump();
            while let Some(c) = self.src[self.pos..].chars().next() {
                let prev = self.src[..self.pos].chars().last().unwrap();
                let exp_sign = matches!(c, '+' | '-') && matches!(prev, 'e' | 'E');
                if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E') || exp_sign {
                    self.bump();
                } else {
                    break;
                }
            }
            let text = &self.src[start..self.pos];
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok((Tok::Num(v), line, col)),
                _ => self.err(line, col, format!("malformed number '{text}'")),
            };
        }
        self.err(line, col, format!("unexpected character '{ch}'"))
    }

    fn peek(&mut self) -> Result<&(Tok, usize, usize)> {
        if self.peeked.is_none() {
            let t = self.lex()?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn next(&mut self) -> Result<(Tok, usize, usize)> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let (t, l, c) = self.next()?;
        if t == want {
            Ok(())
        } else {
            self.err(l, c, format!("expected {what}, found {t:?}"))
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.next()? {
            (Tok::Num(v), _, _) => Ok(v),
            (t, l, c) => self.err(l, c, format!("expected a number, found {t:?}")),
        }
    }

    fn family(&mut self) -> Result<PotentialFamily> {
        let mut members = vec![self.potential(0)?];
        loop {
            match self.next()? {
                (Tok::End, _, _) => break,
                (Tok::Semi, _, _) => {
                    let idx = members.len();
                    members.push(self.potential(idx)?);
                }
                (t, l, c) => return self.err(l, c, format!("expected ';' or end, found {t:?}")),
            }
        }
        PotentialFamily::new(members)
    }

    fn potential(&mut self, index: usize) -> Result<Potential> {
        let (t, l, c) = self.next()?;
        let Tok::Word(w) = t else {
            return self.err(l, c, format!("expected a potential name, found {t:?}"));
        };
        match w.as_str() {
            "quad" => Ok(Potential::Quad),
            "tent" => Ok(Potential::Tent),
            "const" => Ok(Potential::Const(self.number()?)),
            "piecewise" => {
                let mut segments = Vec::new();
                while self.peek()?.0 == Tok::LBracket {
                    self.next()?;
                    let lo = self.number()?;
                    self.expect(Tok::Comma, "','")?;
                    let hi = self.number()?;
                    self.expect(Tok::RBracket, "']'")?;
                    let mut coeffs = Vec::new();
                    while let Tok::Num(_) = self.peek()?.0 {
                        coeffs.push(self.number()?);
                    }
                    if coeffs.is_empty() {
                        let (_, l, c) = self.peek()?.clone();
                        return self.err(l, c, "segment needs at least one coefficient");
                    }
                    segments.push((lo, hi, coeffs));
                }
                if segments.is_empty() {
                    let (_, l, c) = self.peek()?.clone();
                    return self.err(l, c, "piecewise needs at least one segment");
                }
                Potential::piecewise(index, segments)
            }
            other => self.err(l, c, format!("unknown potential '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_values() {
        let f = PotentialFamily::parse("quad; tent; const 0").unwrap();
        assert_eq!(f.eval_f64(0, 0.0).unwrap(), 0.25);
        assert_eq!(f.eval_f64(1, 0.5).unwrap(), 1.0);
        assert_eq!(f.eval_f64(2, 0.731).unwrap(), 0.0);
        assert_eq!(f.eval_f64(0, 0.25).unwrap(), 0.0625);
        let third = CirclePoint::from_ratio(1, 3);
        assert!((f.eval(1, &third).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(PotentialFamily::constant(-1.5).value(0, 0.9), -1.5);
    }

    #[test]
    fn index_out_of_range() {
        let f = PotentialFamily::quad_tent();
        assert!(matches!(
            f.eval_f64(2, 0.1),
            Err(Error::IndexOutOfRange { symbol: 2, size: 2 })
        ));
    }

    #[test]
    fn norms_of_builtins() {
        let f = PotentialFamily::parse("quad; tent; const -3").unwrap();
        assert_eq!(f.sup_norm().per_member, vec![0.25, 1.0, 3.0]);
        assert_eq!(f.sup_norm().max, 3.0);
        assert_eq!(f.lipschitz().per_member, vec![1.0, 2.0, 0.0]);
        assert_eq!(f.lipschitz().max, 2.0);
    }

    #[test]
    fn piecewise_matches_builtins() {
        let pw = PotentialFamily::parse(
            "piecewise [0, 0.5] 0 2 [0.5, 1] 2 -2;\n piecewise [0,1] 0.25 -1 1",
        )
        .unwrap();
        let b = PotentialFamily::quad_tent();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((pw.value(0, x) - b.value(1, x)).abs() < 1e-15);
            assert!((pw.value(1, x) - b.value(0, x)).abs() < 1e-15);
        }
        assert!((pw.sup_norm().per_member[0] - 1.0).abs() < 1e-15);
        assert!((pw.sup_norm().per_member[1] - 0.25).abs() < 1e-15);
        assert!((pw.lipschitz().per_member[0] - 2.0).abs() < 1e-15);
        assert!((pw.lipschitz().per_member[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interior_critical_points_found() {
        // 27x(1-x)^2 - ... : p(x) = x(1-x)(x-0.3) peaks inside both lobes
        let f = PotentialFamily::parse("piecewise [0,1] 0 -0.3 1.3 -1").unwrap();
        let p = |x: f64| x * (1.0 - x) * (x - 0.3);
        let brute_sup = (0..=200_000)
            .map(|i| p(i as f64 / 200_000.0).abs())
            .fold(0.0, f64::max);
        let brute_lip = (0..=200_000)
            .map(|i| {
                let x = i as f64 / 200_000.0;
                (-3.0 * x * x + 2.6 * x - 0.3).abs()
            })
            .fold(0.0, f64::max);
        assert!((f.sup_norm().max - brute_sup).abs() < 1e-9);
        assert!((f.lipschitz().max - brute_lip).abs() < 1e-9);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match PotentialFamily::parse("quad;\n  tnet") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            PotentialFamily::parse("const"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            PotentialFamily::parse("quad tent"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            PotentialFamily::parse("piecewise [0,1]"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn seam_and_breakpoint_errors() {
        assert!(matches!(
            PotentialFamily::parse("piecewise [0,1] 0 1"),
            Err(Error::SeamDiscontinuity { index: 0, .. })
        ));
        assert!(matches!(
            PotentialFamily::parse("quad; piecewise [0,0.6] 0 1 [0.5,1] 0 1"),
            Err(Error::Breakpoints { index: 1, .. })
        ));
        assert!(matches!(
            PotentialFamily::parse("piecewise [0,0.5] 0 [0.5,0.4] 0 [0.4, 1] 0"),
            Err(Error::Breakpoints { .. })
        ));
        assert!(matches!(
            PotentialFamily::parse("piecewise [0,0.5] 0 [0.5,1] 1 -1"),
            Err(Error::InteriorDiscontinuity { .. })
        ));
    }

    #[test]
    fn random_lipschitz_and_sup_bounds() {
        let f = PotentialFamily::parse(
            "quad; tent; piecewise [0,0.25] 0 4 [0.25,0.75] 2 -4 [0.75,1] -4 4",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in 0..f.len() {
            let lip = f.lipschitz().per_member[c];
            let sup = f.sup_norm().per_member[c];
            for _ in 0..1000 {
                let (x, y): (f64, f64) = (rng.gen(), rng.gen());
                let d = crate::circle::distance(x, y);
                assert!((f.value(c, x) - f.value(c, y)).abs() <= lip * d + 1e-9);
            }
            for _ in 0..10_000 {
                let x: f64 = rng.gen();
                assert!(f.value(c, x).abs() <= sup);
            }
        }
    }

    proptest! {
        #[test]
        fn display_parses_back(k in -1e3f64..1e3, a in -5.0f64..5.0, b in 0.05f64..0.95) {
            // continuous hat through (b, a) with zero seam value
            let text = format!(
                "const {k:?}; tent; piecewise [0, {b:?}] 0 {:?} [{b:?}, 1] {:?} {:?}",
                a / b, a / (1.0 - b), -a / (1.0 - b)
            );
            if let Ok(f) = PotentialFamily::parse(&text) {
                let g = PotentialFamily::parse(&f.to_string()).unwrap();
                prop_assert_eq!(f, g);
            }
        }
    }
}
