use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}: SO(n) needs n >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invariant violated: {what} (defect {defect:e})")]
    InvariantViolation { what: &'static str, defect: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter inconsistency: {0}")]
    ParameterInconsistency(String),

    #[error("numerically infeasible: {0}")]
    Infeasible(String),

    #[error("alignment error: {0}")]
    Alignment(String),
}

pub type Result<T> = core::result::Result<T, Error>;
