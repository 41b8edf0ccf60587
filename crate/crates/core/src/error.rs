//! Crate-wide error type. Diagnostic payloads are carried as `f64` so the
//! enum stays independent of the scalar parameter.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix deviates from Hermitian symmetry by {residual:.3e} (tolerance {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix (condition estimate {cond_estimate:.3e})")]
    EigNonConvergence { dim: usize, cond_estimate: f64 },

    #[error("eigenvalue {eigenvalue:.6e} is out of the domain of the power t = {exponent} (floor {floor:.1e})")]
    PowerDomain {
        eigenvalue: f64,
        exponent: f64,
        floor: f64,
    },

    #[error("matrix with minimum eigenvalue {min_eig:.6e} must be positive definite above {floor:.1e}")]
    NotPositiveDefinite { min_eig: f64, floor: f64 },

    #[error("state {index}: {reason}")]
    InvalidState { index: usize, reason: String },

    #[error("density operator has trace {trace:.12} (must be 1 within {tol:.1e})")]
    InvalidTrace { trace: f64, tol: f64 },

    #[error("density operator has eigenvalue {min_eig:.6e} below the PSD tolerance -{tol:.1e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("sum of channel states has minimum eigenvalue {min_eig:.6e}; channel must be non-singular")]
    SingularChannel { min_eig: f64 },

    #[error("alpha = {alpha} must lie strictly inside (0, 1)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("beta = {beta} must be greater than 1")]
    BetaOutOfRange { beta: f64 },

    #[error("delta = {delta} must lie in {range} with n = {n}")]
    DeltaOutOfRange { delta: f64, n: usize, range: &'static str },

    #[error("probability vector invalid: {reason}")]
    InvalidProbability { reason: String },

    #[error("tangent vector components sum to {sum:.3e}, exceeding {tol:.1e}")]
    NotTangent { sum: f64, tol: f64 },

    #[error("row-stochastic matrix invalid: {reason}")]
    InvalidStochastic { reason: String },

    #[error("invalid solver configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("solver failed at iteration {iteration}: {source}")]
    Solve {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },

    #[error("grid search supports alphabets up to {cap}, got n = {n}")]
    GridAlphabetTooLarge { n: usize, cap: usize },

    #[error("channel file invalid: {reason}")]
    InvalidChannelFile { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
