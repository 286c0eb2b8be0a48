//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid activation: {0}")]
    InvalidActivation(String),

    /// A pointwise derivative beyond what the activation supports was
    /// requested and no distributional rule applies. For kinked activations
    /// this signals that the caller must go through the moment engine.
    #[error("derivative of order {order} is not supported by {kind} (max {max})")]
    UnsupportedDerivative {
        kind: &'static str,
        order: u8,
        max: u8,
    },

    #[error("covariance is not symmetric positive semi-definite: {0}")]
    NotPsd(String),

    #[error("matrix is singular within tolerance (duplicate inputs upstream?)")]
    Singular,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure in {context}: {message}")]
    Numerical { context: &'static str, message: String },
}

impl Error {
    pub(crate) fn numerical(context: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical { context, message: message.into() }
    }
}
