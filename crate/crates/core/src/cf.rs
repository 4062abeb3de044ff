//! Exact continued-fraction arithmetic: expansions, convergents, cylinders
//! and their Lebesgue and Gauss measures.
//!
//! Convergents use the seeds `p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1`, so
//! that `[a_1, ..., a_n] = p_n / q_n` and the cylinder of the word has length
//! `1 / (q_n (q_n + q_{n-1}))`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A finite word of partial quotients, every digit at least one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u64>);

impl Word {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if let Some(pos) = digits.iter().position(|&d| d == 0) {
            return Err(Error::Domain(format!("digit {} of the word is zero", pos + 1)));
        }
        Ok(Self(digits))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word extended by one more digit.
    pub fn child(&self, a: u64) -> Result<Self> {
        let mut d = self.0.clone();
        d.push(a);
        Self::new(d)
    }

    /// The rational `[a_1, ..., a_n]` (zero for the empty word).
    pub fn value(&self) -> BigRational {
        let c = convergents(self);
        match c.last() {
            Some(last) => BigRational::new(last.p.clone(), last.q.clone()),
            None => BigRational::zero(),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("]")
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']').trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let digits = s
            .split(',')
            .map(|d| {
                d.trim().parse::<u64>().map_err(|_| Error::Parse {
                    pos: 0,
                    msg: format!("invalid digit `{}`", d.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(digits)
    }
}

/// The convergent `p_n / q_n` of a word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigInt,
    pub q: BigInt,
    pub index: usize,
}

/// Expand `x` in `[0, 1)` by the Euclidean algorithm, stopping after `max_depth` digits.
///
/// Rational expansions terminate, and the last digit of a complete expansion is
/// always at least two.
pub fn expand_rational(x: &BigRational, max_depth: usize) -> Result<Word> {
    if x.is_negative() || x >= &BigRational::one() {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1)")));
    }
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    let mut digits = Vec::new();
    while !num.is_zero() && digits.len() < max_depth {
        let (a, r) = num_integer::Integer::div_rem(&den, &num);
        let a = a
            .to_u64()
            .ok_or_else(|| Error::Domain(format!("partial quotient {a} does not fit in 64 bits")))?;
        digits.push(a);
        den = num;
        num = r;
    }
    Ok(Word(digits))
}

/// All convergents `(p_k, q_k)` for `k = 1..=n`.
pub fn convergents(w: &Word) -> Vec<Convergent> {
    let (mut p_prev, mut p) = (BigInt::one(), BigInt::zero());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::with_capacity(w.len());
    for (k, &a) in w.digits().iter().enumerate() {
        let a = BigInt::from(a);
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        out.push(Convergent { p: p.clone(), q: q.clone(), index: k + 1 });
    }
    out
}

/// Which endpoint of a cylinder belongs to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedEnd {
    Left,
    Right,
}

/// The cylinder `I_n(a_1, ..., a_n)` with exact endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    pub word: Word,
    pub left: BigRational,
    pub right: BigRational,
    pub closed: ClosedEnd,
    /// `(p_{n-1}, q_{n-1}, p_n, q_n)`.
    pub p_prev: BigInt,
    pub q_prev: BigInt,
    pub p: BigInt,
    pub q: BigInt,
}

impl Cylinder {
    pub fn order(&self) -> usize {
        self.word.len()
    }

    /// Exact Lebesgue length `1 / (q_n (q_n + q_{n-1}))`.
    pub fn length(&self) -> BigRational {
        BigRational::new(BigInt::one(), &self.q * (&self.q + &self.q_prev))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        match self.closed {
            ClosedEnd::Left => &self.left <= x && x < &self.right,
            ClosedEnd::Right => &self.left < x && x <= &self.right,
        }
    }

    /// Union of the children with next digit at least `a`, as `(left, right)`.
    pub fn children_from(&self, a: u64) -> (BigRational, BigRational) {
        let a = BigInt::from(a);
        let far = BigRational::new(&a * &self.p + &self.p_prev, &a * &self.q + &self.q_prev);
        let near = BigRational::new(self.p.clone(), self.q.clone());
        if near < far {
            (near, far)
        } else {
            (far, near)
        }
    }
}

pub fn cylinder(w: &Word) -> Cylinder {
    let conv = convergents(w);
    let n = w.len();
    let (p, q) = conv.last().map_or((BigInt::zero(), BigInt::one()), |c| (c.p.clone(), c.q.clone()));
    let (p_prev, q_prev) = match n {
        0 => (BigInt::one(), BigInt::zero()),
        1 => (BigInt::zero(), BigInt::one()),
        _ => (conv[n - 2].p.clone(), conv[n - 2].q.clone()),
    };
    let a = BigRational::new(p.clone(), q.clone());
    let b = BigRational::new(&p + &p_prev, &q + &q_prev);
    let (left, right, closed) = if n % 2 == 0 {
        (a, b, ClosedEnd::Left)
    } else {
        (b, a, ClosedEnd::Right)
    };
    Cylinder { word: w.clone(), left, right, closed, p_prev, q_prev, p, q }
}

/// A real value with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureValue {
    pub value: f64,
    pub abs_error: f64,
}

impl MeasureValue {
    pub fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.abs_error
    }
}

/// Gauss measure of the interval `[left, left + length]` given exactly.
pub(crate) fn gauss_measure_of(left: &BigRational, length: &BigRational) -> MeasureValue {
    // mu_G = log1p(length / (1 + left)) / ln 2
    let z = length / (BigRational::one() + left);
    let z = z.to_f64().unwrap_or(0.0);
    let value = z.ln_1p() / std::f64::consts::LN_2;
    MeasureValue { value, abs_error: 6.0 * f64::EPSILON * value }
}

pub fn gauss_measure(c: &Cylinder) -> MeasureValue {
    if c.word.is_empty() {
        return MeasureValue::exact(1.0);
    }
    gauss_measure_of(&c.left, &c.length())
}

/// Floating continuant pair `(q_{n-1}, q_n)` and `(p_{n-1}, p_n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct FloatConvergent {
    pub p_prev: f64,
    pub p: f64,
    pub q_prev: f64,
    pub q: f64,
    pub order: usize,
}

impl FloatConvergent {
    pub const ROOT: Self = Self { p_prev: 1.0, p: 0.0, q_prev: 0.0, q: 1.0, order: 0 };

    pub fn push(&self, a: u64) -> Self {
        let a = a as f64;
        Self {
            p_prev: self.p,
            p: a * self.p + self.p_prev,
            q_prev: self.q,
            q: a * self.q + self.q_prev,
            order: self.order + 1,
        }
    }

    /// Lebesgue length of the union of children with next digit `>= a`.
    pub fn tail_length(&self, a: f64) -> f64 {
        1.0 / (self.q * (a * self.q + self.q_prev))
    }

    /// Gauss measure of the union of children with digits in `[a, b]` (`b` may be infinite).
    pub fn gauss_children(&self, a: f64, b: f64) -> f64 {
        let len = self.lebesgue_children(a, b);
        let left = self.child_block_left(a, b);
        (len / (1.0 + left)).ln_1p() / std::f64::consts::LN_2
    }

    /// Lebesgue length of the union of children with digits in `[a, b]`.
    pub fn lebesgue_children(&self, a: f64, b: f64) -> f64 {
        if b.is_finite() {
            (b + 1.0 - a) / ((a * self.q + self.q_prev) * ((b + 1.0) * self.q + self.q_prev))
        } else {
            self.tail_length(a)
        }
    }

    fn child_block_left(&self, a: f64, b: f64) -> f64 {
        let x1 = (a * self.p + self.p_prev) / (a * self.q + self.q_prev);
        let x2 = if b.is_finite() {
            ((b + 1.0) * self.p + self.p_prev) / ((b + 1.0) * self.q + self.q_prev)
        } else {
            self.p / self.q
        };
        x1.min(x2)
    }
}
