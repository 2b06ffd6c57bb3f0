use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two sampled objects live on different time grids.
    #[error("grid mismatch: slice width {left} vs {right}")]
    GridMismatch { left: f64, right: f64 },

    #[error("length mismatch: {left} samples vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("numerical failure at step {step}: {reason}")]
    NumericalFailure { step: usize, reason: String },

    #[error("step size too large: trace drift {drift:e} exceeds {limit:e}")]
    StepSize { drift: f64, limit: f64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
