use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("value {0} is outside the supported range")]
    OutOfRange(String),

    /// Digit cancellation consumed all stored digits of a p-adic component,
    /// so the valuation of the result is not determined.
    #[error("indeterminate cancellation in the {p}-adic component (digits exhausted at absolute position {position})")]
    IndeterminateCancellation { p: u64, position: i64 },

    #[error("tolerance {requested:e} unachievable for {what} (best bound {achieved:e})")]
    Tolerance {
        what: String,
        requested: f64,
        achieved: f64,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("grid too coarse: refinement changed the result by {change:e} (tolerance {tol:e})")]
    GridTooCoarse { change: f64, tol: f64 },

    #[error("kernel value {0:e} is negative beyond rounding")]
    NegativeKernel(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
