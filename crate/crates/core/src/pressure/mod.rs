//! Pressure functions, root finding and the Hausdorff-dimension dispatcher.
//!
//! The pressure of `-s ln|T'| - c` over a digit alphabet is computed either by
//! enumerating words ([`wordsum`]) or from the leading eigenvalue of the
//! transfer operator ([`pressure_spectral`]). [`solve_s`] finds the root of
//! `P(s) = f(s) ln B`, and [`hdim_dispatch`] picks the dimension formula.

mod dim;
mod ffun;
mod solve;
mod spectral;
mod wordsum;

use std::fmt;
use std::str::FromStr;

pub use dim::{hdim_dispatch, Branch, BranchOverride, Diagnostics, DimensionResult};
pub use ffun::{f_eval, f_general_iter, f_pair, f_single, f_unit_iter, FKind, FSpec};
pub use solve::{pressure, s_of_b, solve_s, Engine, Root, SofB, DEFAULT_MAX_ALPHABET, DEFAULT_TOL};
pub use spectral::{pressure_spectral, spectral_iterate, PressureValue, DEFAULT_GRID, EXPLICIT_DIGITS};
pub use wordsum::{extrapolate_pressure, transfer_iterate, wordsum, wordsum_with_budget, DEFAULT_BUDGET};

use crate::error::{Error, Result};

/// Digits allowed in the pressure sum: `{1, ..., M}` or all positive integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    Finite(u64),
    Full,
}

impl FromStr for Alphabet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "full" => Ok(Self::Full),
            other => other
                .parse::<u64>()
                .ok()
                .filter(|&m| m >= 1)
                .map(Self::Finite)
                .ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad alphabet size `{s}`") }),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(m) => write!(f, "{m}"),
            Self::Full => f.write_str("inf"),
        }
    }
}
