//! Crate-wide error types.

use thiserror::Error;

/// Reasons a coefficient list is rejected by [`crate::recurrence::Recurrence::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RecurrenceDefect {
    #[error("length must be at least 1")]
    ZeroLength,
    #[error("coefficient list length does not match L")]
    CoefficientCountMismatch,
    #[error("first coefficient must be positive")]
    LeadingCoefficientZero,
    #[error("last coefficient must be positive")]
    TrailingCoefficientZero,
    #[error("coefficients must be non-negative")]
    NegativeCoefficient,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid recurrence: {0}")]
    Recurrence(#[from] RecurrenceDefect),
    /// Malformed user input (CLI arguments, serialized forms).
    #[error("invalid input: {0}")]
    Input(String),
    /// The requested model does not exist for this recurrence
    /// (empty start set, violated theorem assumption).
    #[error("model error: {0}")]
    Model(String),
    /// A size guard tripped before the computation started.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// A can't-happen condition; indicates a bug rather than bad input.
    #[error("internal fault: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
