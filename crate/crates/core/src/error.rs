use thiserror::Error;

pub type Result<T> = std::result::Result<T, HeomError>;

#[derive(Debug, Error)]
pub enum HeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian: |A - A^dag| = {defect:e} exceeds {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("decay rate {0} must have a positive real part")]
    NonPositiveDecay(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation has {count} multi-indices (counting stops at 16x the cap), above the cap of {cap}")]
    SizeCap { count: usize, cap: usize },

    #[error("decay rates need a threshold truncation")]
    NotThreshold,

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("eigenvalue residual {residual:e} exceeds {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("AAA fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
