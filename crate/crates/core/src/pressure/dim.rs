//! Hausdorff dimension of `{x : prod a_{n+i}(x)^{t_i} >= Psi(n) i.o.}`.

use std::fmt;
use std::str::FromStr;

use super::ffun::{FKind, FSpec};
use super::solve::{solve_s, Engine, Root};
use super::spectral::DEFAULT_GRID;
use super::Alphabet;
use crate::error::{Error, Result};
use crate::growth::{estimate_exponents, GrowthExpr, Regime};
use crate::weights::{parse_decimal, Weights};

/// Which dimension formula was applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Branch {
    /// `B = 1`: full dimension.
    BEqualsOne,
    /// `B = infinity`: `1 / (1 + b)`.
    BInfinite { b: f64 },
    /// Finite `B` with one exponent.
    FiniteBExactM1,
    /// Finite `B` with two exponents.
    FiniteBExactM2,
    /// Finite `B` with more than two exponents: lower and upper bounds only.
    FiniteBBracket,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BEqualsOne => "B_equals_1",
            Self::BInfinite { .. } => "B_infinite",
            Self::FiniteBExactM1 => "finiteB_exact_m1",
            Self::FiniteBExactM2 => "finiteB_exact_m2",
            Self::FiniteBBracket => "finiteB_bracket_m_gt_2",
        })
    }
}

/// User-supplied regime for growth functions that are not presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchOverride {
    BEqualsOne,
    FiniteB(f64),
    InfiniteB(f64),
}

impl FromStr for BranchOverride {
    type Err = Error;

    /// `one`, `finite:<B>` or `infinite:<b>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let value = |v: &str| -> Result<f64> {
            parse_decimal(v).map(|r| num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN))
        };
        let parsed = match s.split_once(':') {
            None if s == "one" || s == "b1" => Self::BEqualsOne,
            Some(("finite", v)) => Self::FiniteB(value(v)?),
            Some(("infinite", v)) | Some(("inf", v)) => Self::InfiniteB(value(v)?),
            _ => return Err(Error::Config(format!("bad branch `{s}` (expected one, finite:<B> or infinite:<b>)"))),
        };
        match parsed {
            Self::FiniteB(b) if !(b > 1.0 && b.is_finite()) => Err(Error::Domain(format!("finite branch needs B > 1, got {b}"))),
            Self::InfiniteB(b) if !(b >= 1.0 && b.is_finite()) => Err(Error::Domain(format!("infinite branch needs b >= 1, got {b}"))),
            p => Ok(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// `preset` or `override`.
    pub source: &'static str,
    pub b_base: Option<f64>,
    pub alphabet: Alphabet,
    pub grid: usize,
    pub tol: f64,
    /// Largest pressure-engine error seen in any solve.
    pub engine_error: f64,
    /// Named candidate roots that entered the result.
    pub candidates: Vec<(String, f64)>,
    /// Set when the two-exponent root was recomputed with `f(s) = s / t1`.
    pub reduction_agreement: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionResult {
    pub lower: f64,
    pub upper: f64,
    pub branch: Branch,
    pub diagnostics: Diagnostics,
}

impl DimensionResult {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

fn regime_of(e: &GrowthExpr, branch_override: Option<BranchOverride>) -> Result<(Regime, &'static str)> {
    if let Some(o) = branch_override {
        let r = match o {
            BranchOverride::BEqualsOne => Regime::Subexponential,
            BranchOverride::FiniteB(b) => Regime::FiniteB { b_base: b },
            BranchOverride::InfiniteB(b) => Regime::InfiniteB { b },
        };
        return Ok((r, "override"));
    }
    if let Some(p) = e.preset() {
        return p
            .regime()
            .map(|r| (r, "preset"))
            .ok_or_else(|| Error::Domain(format!("growth function {} drops below 1", e.text())));
    }
    let hint = match estimate_exponents(e, 1024) {
        Ok((big_b, small_b)) => format!(
            "windowed estimates on [512, 1024]: B ~ {:.6e}, b ~ {:.6e}",
            big_b.value, small_b.value
        ),
        Err(err) => format!("exponent estimation failed: {err}"),
    };
    Err(Error::BranchUnresolved(hint))
}

/// Dimension of the limsup set for `Psi` and weights `t`.
///
/// `B = 1` gives 1 and `B = infinity` gives `1/(1+b)`. For finite `B` the
/// value is the full-alphabet root of `P(s) = f(s) ln B`: with `f = s/t0` for
/// one exponent and the two-exponent f-function for two. With more exponents
/// only a bracket is available, from the best containment lower bound up to
/// the root of the general iteration.
pub fn hdim_dispatch(
    e: &GrowthExpr,
    t: &Weights,
    branch_override: Option<BranchOverride>,
    tol: f64,
) -> Result<DimensionResult> {
    let (regime, source) = regime_of(e, branch_override)?;
    let mut diagnostics = Diagnostics {
        source,
        b_base: None,
        alphabet: Alphabet::Full,
        grid: DEFAULT_GRID,
        tol,
        engine_error: 0.0,
        candidates: Vec::new(),
        reduction_agreement: None,
    };
    let exact = |v: f64, branch: Branch, diagnostics: Diagnostics| DimensionResult { lower: v, upper: v, branch, diagnostics };
    let b_base = match regime {
        Regime::Subexponential => return Ok(exact(1.0, Branch::BEqualsOne, diagnostics)),
        Regime::InfiniteB { b } => return Ok(exact(1.0 / (1.0 + b), Branch::BInfinite { b }, diagnostics)),
        Regime::FiniteB { b_base } => b_base,
    };
    diagnostics.b_base = Some(b_base);
    let engine = Engine::Spectral { grid: DEFAULT_GRID };
    let solve = |name: String, spec: FSpec, diagnostics: &mut Diagnostics| -> Result<Root> {
        let r = solve_s(Alphabet::Full, b_base, &spec, tol, engine)?;
        diagnostics.engine_error = diagnostics.engine_error.max(r.pressure_error);
        diagnostics.candidates.push((name, r.s));
        Ok(r)
    };
    let tv = t.values();
    match tv.len() {
        1 => {
            let r = solve(format!("single({})", tv[0]), FSpec::single(tv[0])?, &mut diagnostics)?;
            Ok(DimensionResult { lower: r.lo, upper: r.hi, branch: Branch::FiniteBExactM1, diagnostics })
        }
        2 => {
            let r = solve("pair".into(), FSpec::new(t.clone(), FKind::Pair)?, &mut diagnostics)?;
            let s = r.s;
            // past the kink of the max the pair formula reduces to s / t1
            if s / tv[1] - (2.0 * s - 1.0) / tv[0] <= 0.0 {
                let r1 = solve(format!("single({})", tv[1]), FSpec::single(tv[1])?, &mut diagnostics)?;
                let gap = (r1.s - s).abs();
                if gap > 2.0 * tol {
                    return Err(Error::Config(format!(
                        "reduced root {} disagrees with the pair root {s} by {gap:.3e}",
                        r1.s
                    )));
                }
                diagnostics.reduction_agreement = Some(gap);
            }
            Ok(DimensionResult { lower: r.lo, upper: r.hi, branch: Branch::FiniteBExactM2, diagnostics })
        }
        _ => {
            let pair = Weights::new(t.exponents()[..2].to_vec())?;
            let mut lower = solve("pair(t0,t1)".into(), FSpec::new(pair, FKind::Pair)?, &mut diagnostics)?.lo;
            for (i, &ti) in tv.iter().enumerate() {
                let r = solve(format!("single(t{i})"), FSpec::single(ti)?, &mut diagnostics)?;
                lower = lower.max(r.lo);
            }
            let upper = solve("general".into(), FSpec::new(t.clone(), FKind::GeneralIter)?, &mut diagnostics)?.hi;
            if lower > upper + 2.0 * tol {
                return Err(Error::Config(format!("lower bound {lower} exceeds upper bound {upper}")));
            }
            Ok(DimensionResult { lower: lower.min(upper), upper, branch: Branch::FiniteBBracket, diagnostics })
        }
    }
}
