//! Exponent tuples `t = (t_0, ..., t_{m-1})`.
//!
//! Exponents are kept as exact rationals parsed from their decimal spelling so
//! that ties against the maximum are decided without rounding.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A single positive exponent with its exact and floating values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent {
    exact: BigRational,
}

impl Exponent {
    pub fn from_rational(exact: BigRational) -> Result<Self> {
        if !exact.is_positive() {
            return Err(Error::Domain(format!("exponent must be positive, got {exact}")));
        }
        Ok(Self { exact })
    }

    pub fn from_integer(v: u64) -> Result<Self> {
        Self::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.exact.to_f64().unwrap_or(f64::NAN)
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_rational(parse_decimal(s)?)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact.is_integer() {
            write!(f, "{}", self.exact.numer())
        } else {
            write!(f, "{}", self.exact)
        }
    }
}

/// Parse a decimal literal (`12`, `0.75`, `1.5e3`, `3/4`) into an exact rational.
pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let err = |msg: &str| Error::Parse { pos: 0, msg: format!("{msg}: `{text}`") };
    if s.is_empty() {
        return Err(err("empty number"));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| err("bad exponent"))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err("invalid digit"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = digits.parse().map_err(|_| err("invalid digits"))?;
    if neg {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 {
        BigRational::from_integer(numer * pow)
    } else {
        BigRational::new(numer, pow)
    })
}

/// The exponent tuple of a weighted product.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weights {
    exps: Vec<Exponent>,
}

impl Weights {
    pub fn new(exps: Vec<Exponent>) -> Result<Self> {
        if exps.is_empty() {
            return Err(Error::Domain("at least one exponent is required".into()));
        }
        Ok(Self { exps })
    }

    /// All-ones weights of length `m`.
    pub fn ones(m: usize) -> Result<Self> {
        Self::new((0..m).map(|_| Exponent::from_integer(1)).collect::<Result<_>>()?)
    }

    pub fn from_f64s(values: &[f64]) -> Result<Self> {
        let exps = values
            .iter()
            .map(|&v| {
                BigRational::from_float(v)
                    .ok_or_else(|| Error::Domain(format!("exponent {v} is not finite")))
                    .and_then(Exponent::from_rational)
            })
            .collect::<Result<_>>()?;
        Self::new(exps)
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exps
    }

    pub fn values(&self) -> Vec<f64> {
        self.exps.iter().map(Exponent::value).collect()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.exps[i].value()
    }

    pub fn t_max(&self) -> f64 {
        self.max_exponent().value()
    }

    pub fn max_exponent(&self) -> &Exponent {
        self.exps.iter().max().expect("weights are nonempty")
    }

    /// Number of exponents equal to the maximum, compared exactly.
    pub fn ell(&self) -> usize {
        let max = self.max_exponent();
        self.exps.iter().filter(|e| *e == max).count()
    }

    /// Copy with the exponents sorted in descending order.
    pub fn sorted_descending(&self) -> Self {
        let mut exps = self.exps.clone();
        exps.sort_by(|a, b| b.cmp(a));
        Self { exps }
    }
}

impl FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let exps = s
            .split(',')
            .map(|part| part.trim().parse::<Exponent>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(exps)
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.exps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}
