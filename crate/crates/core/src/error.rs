use thiserror::Error;

/// Failures raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("permutation orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("order t = {t} exceeds the configured cap {cap} (set CHANNEL_MOMENTS_MAX_T to raise it)")]
    OrderTooLarge { t: usize, cap: usize },

    #[error("Gram matrix is singular for t = {t}, d = {d} (need d >= t)")]
    SingularGram { t: usize, d: usize },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Kraus completeness violated: deviation {0:e}")]
    CompletenessViolation(f64),

    #[error("map is not completely positive: most negative Choi eigenvalue {min_eigenvalue:e}")]
    CpViolation { min_eigenvalue: f64 },

    #[error("generator does not square to the identity")]
    NonInvolutory,

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("eigen-solver did not converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
