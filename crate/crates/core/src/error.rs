use thiserror::Error;

/// Errors raised by estimators and band constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a sample invariant (positivity, size, finiteness).
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// A grid point violates a precondition of the estimator.
    #[error("precondition failed at p = {p}: {reason}")]
    Precondition { p: f64, reason: String },

    /// The data carry no information for the requested quantity.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An iterative numerical routine failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by the caller's input or data rather than by
    /// a failing numerical routine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
