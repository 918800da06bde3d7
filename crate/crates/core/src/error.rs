use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid Jacobi data: {0}")]
    InvalidSpec(String),
    #[error("{what} too short: need {needed}, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("operation requires real mode")]
    RequiresRealMode,
    #[error("block not invertible: leading minor of order {order} vanishes (pivot {pivot:e}, tolerance {tol:e})")]
    SingularMinor { order: usize, pivot: f64, tol: f64 },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("moments not realizable: {0}")]
    NotRealizable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("pole: lambda coincides with eigenvalue {0}")]
    Pole(f64),
    #[error("series does not converge: |z| = {0}")]
    NotConvergent(f64),
    #[error("rank mismatch: expected {expected}, detected {detected}")]
    RankMismatch { expected: usize, detected: usize },
    #[error("conditioning failure: {0}")]
    Conditioning(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
