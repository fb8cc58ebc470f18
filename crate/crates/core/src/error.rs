//! Shared error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters at construction or configuration time.
    #[error("configuration: {0}")]
    Config(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A non-finite value appeared where a finite one is required.
    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    /// Finite-difference step is indistinguishable from zero at this point.
    #[error("finite-difference step {h} vanishes at coordinate {index}")]
    StepTooSmall { h: f64, index: usize },

    /// A linear system was numerically rank-deficient.
    #[error("rank-deficient system (condition estimate {cond_estimate:.3e})")]
    RankDeficient { cond_estimate: f64 },

    /// A certificate or rule cannot be evaluated from the given trace.
    #[error("unavailable: {0}")]
    Unavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
