//! Growth-function syntax trees and their evaluation in log space.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A numeric literal, exact when it was spelled as a decimal.
#[derive(Clone, Debug, PartialEq)]
pub struct Number {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Number {
    pub fn approx(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn exact(exact: BigRational) -> Self {
        Self { value: exact.to_f64().unwrap_or(f64::NAN), exact: Some(exact) }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) if r.is_integer() => write!(f, "{}", r.numer()),
            _ => write!(f, "{}", self.value),
        }
    }
}

/// Named growth families with closed-form logarithms.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// `B^n`
    Pow(Number),
    /// `n^a`
    Poly(Number),
    /// `c^(beta^n)`
    DoubleExp(Number, Number),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Number),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
    Preset(Preset),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var => f.write_str("n"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Preset(Preset::Pow(b)) => write!(f, "pow({b})"),
            Expr::Preset(Preset::Poly(a)) => write!(f, "poly({a})"),
            Expr::Preset(Preset::DoubleExp(c, b)) => write!(f, "doubleexp({c}, {b})"),
        }
    }
}

/// A signed real stored as `sign * exp(ln_abs)`; zero has `ln_abs = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LogNum {
    neg: bool,
    ln_abs: f64,
}

impl LogNum {
    const ZERO: Self = Self { neg: false, ln_abs: f64::NEG_INFINITY };

    fn from_f64(x: f64) -> Self {
        Self { neg: x < 0.0, ln_abs: x.abs().ln() }
    }

    fn positive_ln(ln: f64) -> Self {
        Self { neg: false, ln_abs: ln }
    }

    pub(crate) fn to_f64(self) -> f64 {
        let m = self.ln_abs.exp();
        if self.neg {
            -m
        } else {
            m
        }
    }

    fn is_zero(self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    fn negate(self) -> Self {
        if self.is_zero() {
            self
        } else {
            Self { neg: !self.neg, ln_abs: self.ln_abs }
        }
    }

    fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= other.ln_abs { (self, other) } else { (other, self) };
        if big.ln_abs == f64::INFINITY {
            return big;
        }
        let d = small.ln_abs - big.ln_abs;
        if big.neg == small.neg {
            Self { neg: big.neg, ln_abs: big.ln_abs + d.exp().ln_1p() }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            Self { neg: big.neg, ln_abs: big.ln_abs + (-d.exp_m1()).ln() }
        }
    }

    fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self { neg: self.neg != other.neg, ln_abs: self.ln_abs + other.ln_abs }
    }

    fn div(self, other: Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Domain("division by zero in growth expression".into()));
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        Ok(Self { neg: self.neg != other.neg, ln_abs: self.ln_abs - other.ln_abs })
    }

    fn pow(self, exponent: Self) -> Result<Self> {
        let mut y = exponent.to_f64();
        // exponents travel through exp(ln y); snap values that were integers
        if (y - y.round()).abs() <= 8.0 * f64::EPSILON * y.abs().max(1.0) {
            y = y.round();
        }
        if self.is_zero() {
            return if y > 0.0 {
                Ok(Self::ZERO)
            } else {
                Err(Error::Domain("zero raised to a non-positive power".into()))
            };
        }
        let ln = if self.ln_abs == 0.0 { 0.0 } else { y * self.ln_abs };
        if self.neg {
            if y.fract() != 0.0 || !y.is_finite() {
                return Err(Error::Domain("negative base with non-integer exponent".into()));
            }
            let odd = (y / 2.0).fract() != 0.0;
            return Ok(Self { neg: odd, ln_abs: ln });
        }
        Ok(Self::positive_ln(ln))
    }

    fn log(self) -> Result<Self> {
        if self.neg || self.is_zero() {
            return Err(Error::Domain("logarithm of a non-positive value".into()));
        }
        Ok(Self::from_f64(self.ln_abs))
    }

    fn exp(self) -> Self {
        Self::positive_ln(self.to_f64())
    }
}

impl Expr {
    pub(crate) fn eval(&self, n: u64) -> Result<LogNum> {
        Ok(match self {
            Expr::Num(x) => LogNum::from_f64(x.value),
            Expr::Var => LogNum::from_f64(n as f64),
            Expr::Add(a, b) => a.eval(n)?.add(b.eval(n)?),
            Expr::Sub(a, b) => a.eval(n)?.add(b.eval(n)?.negate()),
            Expr::Mul(a, b) => a.eval(n)?.mul(b.eval(n)?),
            Expr::Div(a, b) => a.eval(n)?.div(b.eval(n)?)?,
            Expr::Pow(a, b) => a.eval(n)?.pow(b.eval(n)?)?,
            Expr::Log(a) => a.eval(n)?.log()?,
            Expr::Exp(a) => a.eval(n)?.exp(),
            Expr::Preset(p) => LogNum::positive_ln(p.log_value(n)),
        })
    }

    /// `ln ln` of the value, computed without forming `ln` when it would overflow.
    pub(crate) fn eval_loglog(&self, n: u64) -> Result<f64> {
        match self {
            Expr::Preset(Preset::DoubleExp(c, beta)) => Ok(n as f64 * beta.value.ln() + c.value.ln().ln()),
            Expr::Pow(base, exponent) => {
                let b = base.eval(n)?;
                let e = exponent.eval(n)?;
                if !b.neg && b.ln_abs > 0.0 && !e.neg {
                    Ok(e.ln_abs + b.ln_abs.ln())
                } else {
                    Ok(self.eval(n)?.ln_abs.ln())
                }
            }
            Expr::Exp(a) => {
                let v = a.eval(n)?;
                Ok(if v.neg { f64::NAN } else { v.ln_abs })
            }
            _ => Ok(self.eval(n)?.ln_abs.ln()),
        }
    }

    /// Exact rational value when the expression only involves rational operations.
    pub(crate) fn eval_exact(&self, n: u64) -> Option<BigRational> {
        const MAX_BITS: u64 = 1 << 20;
        let int_pow = |base: BigRational, k: &BigRational| -> Option<BigRational> {
            if !k.is_integer() {
                return None;
            }
            let k = k.to_i64()?;
            let bits = base.numer().bits().max(base.denom().bits());
            if bits.saturating_mul(k.unsigned_abs()) > MAX_BITS {
                return None;
            }
            if base.is_zero() && k <= 0 {
                return None;
            }
            let e = k.unsigned_abs() as usize;
            let numer = num_traits::pow(base.numer().clone(), e);
            let denom = num_traits::pow(base.denom().clone(), e);
            Some(if k >= 0 {
                BigRational::new(numer, denom)
            } else {
                BigRational::new(denom, numer)
            })
        };
        match self {
            Expr::Num(x) => x.exact.clone(),
            Expr::Var => Some(BigRational::from_integer(BigInt::from(n))),
            Expr::Add(a, b) => Some(a.eval_exact(n)? + b.eval_exact(n)?),
            Expr::Sub(a, b) => Some(a.eval_exact(n)? - b.eval_exact(n)?),
            Expr::Mul(a, b) => Some(a.eval_exact(n)? * b.eval_exact(n)?),
            Expr::Div(a, b) => {
                let d = b.eval_exact(n)?;
                if d.is_zero() {
                    None
                } else {
                    Some(a.eval_exact(n)? / d)
                }
            }
            Expr::Pow(a, b) => int_pow(a.eval_exact(n)?, &b.eval_exact(n)?),
            Expr::Log(_) | Expr::Exp(_) => None,
            Expr::Preset(Preset::Pow(b)) => {
                int_pow(b.exact.clone()?, &BigRational::from_integer(BigInt::from(n)))
            }
            Expr::Preset(Preset::Poly(a)) => {
                int_pow(BigRational::from_integer(BigInt::from(n)), a.exact.as_ref()?)
            }
            Expr::Preset(Preset::DoubleExp(c, beta)) => {
                let k = int_pow(beta.exact.clone()?, &BigRational::from_integer(BigInt::from(n)))?;
                int_pow(c.exact.clone()?, &k)
            }
        }
    }

    fn mentions_var(&self) -> bool {
        match self {
            Expr::Var | Expr::Preset(_) => true,
            Expr::Num(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.mentions_var() || b.mentions_var()
            }
            Expr::Log(a) | Expr::Exp(a) => a.mentions_var(),
        }
    }

    /// Fold a constant subexpression into a number.
    pub(crate) fn as_constant(&self) -> Option<Number> {
        if self.mentions_var() {
            return None;
        }
        if let Some(exact) = self.eval_exact(1) {
            return Some(Number::exact(exact));
        }
        self.eval(1).ok().map(|v| Number::approx(v.to_f64()))
    }

    /// Rewrite the recognised shapes `b^n`, `n^a` and `c^(beta^n)` as presets.
    pub(crate) fn normalize(self) -> Expr {
        match self {
            Expr::Pow(base, exponent) => {
                let base = base.normalize();
                let exponent = exponent.normalize();
                match (&base, &exponent) {
                    (Expr::Num(b), Expr::Var) => Expr::Preset(Preset::Pow(b.clone())),
                    (Expr::Var, Expr::Num(a)) => Expr::Preset(Preset::Poly(a.clone())),
                    (Expr::Num(c), Expr::Preset(Preset::Pow(beta))) => {
                        Expr::Preset(Preset::DoubleExp(c.clone(), beta.clone()))
                    }
                    _ => Expr::Pow(Box::new(base), Box::new(exponent)),
                }
            }
            Expr::Add(a, b) => Expr::Add(Box::new(a.normalize()), Box::new(b.normalize())),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.normalize()), Box::new(b.normalize())),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.normalize()), Box::new(b.normalize())),
            Expr::Div(a, b) => Expr::Div(Box::new(a.normalize()), Box::new(b.normalize())),
            Expr::Log(a) => Expr::Log(Box::new(a.normalize())),
            Expr::Exp(a) => Expr::Exp(Box::new(a.normalize())),
            other => other,
        }
    }
}

impl Preset {
    fn log_value(&self, n: u64) -> f64 {
        let n = n as f64;
        match self {
            Preset::Pow(b) => n * b.value.ln(),
            Preset::Poly(a) => a.value * n.ln(),
            Preset::DoubleExp(c, beta) => (n * beta.value.ln()).exp() * c.value.ln(),
        }
    }
}

/// Asymptotic regime of a growth function, read off from `B` and `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    /// `B = 1`.
    Subexponential,
    /// `1 < B < infinity`.
    FiniteB { b_base: f64 },
    /// `B = infinity` with `b` the double-exponential rate.
    InfiniteB { b: f64 },
}

impl Preset {
    /// Exact regime of a preset; `None` when the preset drops below one.
    pub fn regime(&self) -> Option<Regime> {
        let one = |x: &Number| x.exact.as_ref().map_or(x.value == 1.0, |r| r.is_one());
        match self {
            Preset::Pow(b) if one(b) => Some(Regime::Subexponential),
            Preset::Pow(b) if b.value > 1.0 => Some(Regime::FiniteB { b_base: b.value }),
            Preset::Pow(_) => None,
            Preset::Poly(a) if a.value >= 0.0 => Some(Regime::Subexponential),
            Preset::Poly(_) => None,
            Preset::DoubleExp(c, _) if one(c) => Some(Regime::Subexponential),
            Preset::DoubleExp(c, _) if c.value < 1.0 => None,
            Preset::DoubleExp(c, beta) if one(beta) => Some(Regime::FiniteB { b_base: c.value }),
            Preset::DoubleExp(_, beta) if beta.value > 1.0 => Some(Regime::InfiniteB { b: beta.value }),
            Preset::DoubleExp(_, beta) if beta.value > 0.0 => Some(Regime::Subexponential),
            Preset::DoubleExp(..) => None,
        }
    }
}

/// Parsed growth function `Psi(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthExpr {
    pub(crate) root: Expr,
    text: String,
}

impl GrowthExpr {
    pub(crate) fn new(root: Expr, text: &str) -> Self {
        Self { root, text: text.trim().to_string() }
    }

    pub fn pow(b: f64) -> Self {
        Self::from_preset(Preset::Pow(num(b)))
    }

    pub fn poly(a: f64) -> Self {
        Self::from_preset(Preset::Poly(num(a)))
    }

    pub fn double_exp(c: f64, beta: f64) -> Self {
        Self::from_preset(Preset::DoubleExp(num(c), num(beta)))
    }

    fn from_preset(p: Preset) -> Self {
        let root = Expr::Preset(p);
        let text = root.to_string();
        Self { root, text }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn ast(&self) -> &Expr {
        &self.root
    }

    pub fn preset(&self) -> Option<&Preset> {
        match &self.root {
            Expr::Preset(p) => Some(p),
            _ => None,
        }
    }

    /// `Psi(n)` as an exact rational, when rational arithmetic suffices.
    pub fn eval_exact(&self, n: u64) -> Option<BigRational> {
        self.root.eval_exact(n)
    }

    /// `ln ln Psi(n)`; `-inf` when `Psi(n) = 1`.
    pub fn eval_loglog(&self, n: u64) -> Result<f64> {
        let l = eval_log_growth(self, n)?;
        if l == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        self.root.eval_loglog(n)
    }
}

fn num(x: f64) -> Number {
    match BigRational::from_float(x) {
        Some(r) => Number { value: x, exact: Some(r) },
        None => Number::approx(x),
    }
}

/// `ln Psi(n)` evaluated without materialising `Psi(n)`.
pub fn eval_log_growth(e: &GrowthExpr, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("growth functions are evaluated at n >= 1".into()));
    }
    let v = e.root.eval(n)?;
    let tiny = 4.0 * f64::EPSILON;
    if v.neg && !v.is_zero() || v.ln_abs.is_nan() || v.ln_abs < -tiny {
        return Err(Error::GrowthBelowOne { n, log_value: if v.neg { f64::NAN } else { v.ln_abs } });
    }
    Ok(v.ln_abs.max(0.0))
}
