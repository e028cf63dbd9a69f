use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// Names the first violated invariant of a problem or model.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A constraint cannot be met anywhere inside the weight box.
    #[error("constraint {index} is infeasible over the weight box: {detail}")]
    Infeasible { index: usize, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("model has {bits} bits, exhaustive search is limited to {max}")]
    TooLarge { bits: usize, max: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConverged { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
