use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("factorization failed: pivot {pivot} at row {row} is not positive")]
    Factorization { row: usize, pivot: f64 },
    #[error("state Newton did not converge after {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
