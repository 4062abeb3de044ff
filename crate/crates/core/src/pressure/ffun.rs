//! Penalty multipliers `f(s)` that turn the growth rate `ln B` into the
//! constant subtracted from the pressure.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::weights::Weights;

/// `s / t0`.
pub fn f_single(t0: f64, s: f64) -> f64 {
    s / t0
}

/// `s^2 / (t0 t1 max{s/t1 + (1-s)/t0, s/t0})`.
pub fn f_pair(t0: f64, t1: f64, s: f64) -> f64 {
    let m = (s / t1 + (1.0 - s) / t0).max(s / t0);
    if m == 0.0 {
        return 0.0;
    }
    s * s / (t0 * t1 * m)
}

/// `m`-fold iterate of `f -> s f / (1 - s + f)` from `f_1(s) = s`.
///
/// Vanishing denominators only occur at `s = 0`, where the value is taken
/// to be 0 by continuity.
pub fn f_unit_iter(m: usize, s: f64) -> f64 {
    let mut f = s;
    for _ in 1..m {
        let d = 1.0 - s + f;
        f = if d == 0.0 { 0.0 } else { s * f / d };
    }
    f
}

/// Iteration over general weights, starting from `s / t0` and using the
/// denominator `t_l f + max{0, s - (2s - 1) t_l / max_{i<l} t_i}`.
pub fn f_general_iter(t: &[f64], s: f64) -> f64 {
    let mut f = s / t[0];
    let mut head_max = t[0];
    for &tl in &t[1..] {
        let d = tl * f + (s - (2.0 * s - 1.0) * tl / head_max).max(0.0);
        f = if d == 0.0 { 0.0 } else { s * f / d };
        head_max = head_max.max(tl);
    }
    f
}

/// Which f-function to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FKind {
    /// `s / t0` with the first exponent.
    Single,
    /// The two-exponent formula; needs exactly two exponents.
    Pair,
    /// Unit-weight iteration of the given length.
    UnitIter(usize),
    /// Weighted iteration over all exponents.
    GeneralIter,
}

impl FromStr for FKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "single" => Ok(Self::Single),
            "pair" => Ok(Self::Pair),
            "general" | "general-iter" | "generaliter" => Ok(Self::GeneralIter),
            _ => {
                let m = lower
                    .strip_prefix("unit")
                    .map(|r| r.trim_start_matches(['-', '_']).trim_start_matches("iter").trim_matches(['(', ')', ':', '-']))
                    .ok_or_else(|| Error::Config(format!("unknown f kind `{s}`")))?;
                if m.is_empty() {
                    // length taken from the weights
                    return Ok(Self::UnitIter(0));
                }
                m.parse::<usize>()
                    .ok()
                    .filter(|&m| m >= 1)
                    .map(Self::UnitIter)
                    .ok_or_else(|| Error::Config(format!("bad unit iteration length in `{s}`")))
            }
        }
    }
}

impl fmt::Display for FKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Single => f.write_str("single"),
            Self::Pair => f.write_str("pair"),
            Self::UnitIter(m) => write!(f, "unit({m})"),
            Self::GeneralIter => f.write_str("general"),
        }
    }
}

/// A validated f-function: kind plus weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FSpec {
    weights: Weights,
    kind: FKind,
    values: Vec<f64>,
}

impl FSpec {
    /// `UnitIter(0)` takes its length from the weights.
    pub fn new(weights: Weights, kind: FKind) -> Result<Self> {
        let kind = match kind {
            FKind::Pair if weights.len() != 2 => {
                return Err(Error::Domain(format!("pair f-function needs 2 exponents, got {}", weights.len())))
            }
            FKind::UnitIter(0) => FKind::UnitIter(weights.len()),
            k => k,
        };
        let values = weights.values();
        Ok(Self { weights, kind, values })
    }

    pub fn single(t0: f64) -> Result<Self> {
        Self::new(Weights::from_f64s(&[t0])?, FKind::Single)
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn kind(&self) -> FKind {
        self.kind
    }

    pub fn eval(&self, s: f64) -> f64 {
        let t = &self.values;
        match self.kind {
            FKind::Single => f_single(t[0], s),
            FKind::Pair => f_pair(t[0], t[1], s),
            FKind::UnitIter(m) => f_unit_iter(m, s),
            FKind::GeneralIter => f_general_iter(t, s),
        }
    }
}

/// Evaluate an f-function, validating `s` in `[0, 1]`.
pub fn f_eval(spec: &FSpec, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s = {s} is outside [0, 1]")));
    }
    Ok(spec.eval(s))
}
