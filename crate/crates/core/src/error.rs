use thiserror::Error;

#[derive(Debug, Error)]
pub enum MorlError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid preference: {0}")]
    InvalidPreference(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {what} = {index} (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("mixing stationary and per-step data")]
    ModeMismatch,

    #[error("JL construction failed after {retries} attempts (best achieved eps {best_eps})")]
    RetriesExhausted { retries: usize, best_eps: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = MorlError> = std::result::Result<T, E>;
