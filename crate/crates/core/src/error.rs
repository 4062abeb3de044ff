use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Text could not be parsed.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    /// `Psi(n) < 1` at the named index.
    #[error("growth function is below 1 at n = {n} (log value {log_value})")]
    GrowthBelowOne { n: u64, log_value: f64 },

    /// Exhaustive enumeration would exceed the visit budget.
    #[error("enumeration of {requested:.3e} words exceeds the budget of {budget:.3e}; use the spectral engine")]
    Budget { requested: f64, budget: f64 },

    #[error("iteration did not converge after {iterations} steps (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Root finding was asked to work on an interval without a sign change.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension branch cannot be decided from finite data ({0}); supply a branch override")]
    BranchUnresolved(String),
}
