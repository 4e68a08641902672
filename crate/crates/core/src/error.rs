//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by model validation, analytical formulas, oracles and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented invariant.
    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    /// A formula was evaluated outside its domain of validity.
    #[error("{what} is outside its domain: {reason}")]
    Domain { what: &'static str, reason: String },

    /// The system is degenerate (zero variance) and the requested quantity is undefined.
    #[error("degenerate system: {0}")]
    Degenerate(String),

    /// A birth-death or Lindley chain is not positive recurrent.
    #[error("unstable chain: {0}")]
    Unstable(String),

    /// Adaptive quadrature or an iterative solver did not reach its tolerance.
    #[error("numerical non-convergence in {what}: achieved error estimate {achieved:e}")]
    NonConvergence { what: &'static str, achieved: f64 },

    /// Regression or summary statistics could not be formed from the inputs.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Failure while loading an input file.
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
