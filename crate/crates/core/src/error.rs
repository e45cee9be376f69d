use thiserror::Error;

/// Errors produced by the bound, refinement and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed textual input (probability, grid or range syntax).
    #[error("parse error: {0}")]
    Parse(String),

    /// The exact oracle was asked for more trials than it is configured to handle.
    #[error("exact oracle limited to n <= {limit}, got n = {n}; use cdf_beta for larger n")]
    Capacity { n: u64, limit: u64 },

    /// An iterative method did not reach its tolerance.
    #[error("{method} did not converge after {iterations} iterations (last estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        estimate: f64,
        error: f64,
    },

    /// A root bracket that should exist by monotonicity was not found.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        domain(format!("{what} must be finite, got {x}"))
    }
}
