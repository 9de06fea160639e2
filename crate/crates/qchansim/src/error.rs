use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("iteration budget exhausted after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("channel is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },
    #[error("map is not trace nonincreasing (eigenvalue of 1 - sum E^dag E is {min_eigenvalue:.3e})")]
    NotSubnormalized { min_eigenvalue: f64 },
    #[error("coefficient matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e})")]
    CoefficientNotPsd { min_eigenvalue: f64 },
    #[error("target map is not idempotent (Choi distance {distance:.3e})")]
    NotIdempotent { distance: f64 },
    #[error("noise is not correctable on this code (residual {residual:.3e})")]
    NotCorrectable { residual: f64 },
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("dimension {dim} exceeds the brute-force limit {limit}")]
    DeskScaleExceeded { dim: usize, limit: usize },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
