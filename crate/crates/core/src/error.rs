use thiserror::Error;

/// Errors produced by evaluators, transforms and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The quantity is genuinely infinite at the requested point.
    #[error("divergence: {0}")]
    Divergence(String),

    /// A series or iteration did not reach the requested tolerance.
    #[error("no convergence after {iterations} iterations: {what}")]
    Convergence { what: String, iterations: usize },

    /// A quadrature did not meet its tolerance; carries the best estimate.
    #[error("quadrature failed ({reason}): value {value:e}, error estimate {abs_err:e}")]
    Quadrature {
        reason: String,
        value: f64,
        abs_err: f64,
    },

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The request is valid in principle but outside what is implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The result does not fit in an `f64`.
    #[error("overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn divergence(msg: impl Into<String>) -> Error {
    Error::Divergence(msg.into())
}
