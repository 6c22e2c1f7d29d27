use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("batch {batch} is empty (history has {len} entries, batch size {batch_size})")]
    EmptyBatch {
        batch: usize,
        len: usize,
        batch_size: usize,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("model error: {0}")]
    Model(String),

    #[error("insufficient diversity: batch covariance is singular (min eigenvalue {0:e})")]
    InsufficientDiversity(f64),

    #[error("simulation radius violated: residual variance {0:e} is negative")]
    RadiusViolation(f64),

    #[error("action {0} is not available this round")]
    UnavailableAction(usize),

    #[error("ledger has no predictions recorded")]
    MissingPredictions,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-positive value in scaling fit: {0}")]
    NonPositive(f64),

    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("type mismatch for `{key}`: expected {expected}, got `{value}`")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        value: String,
    },

    #[error("replicate with seed {seed} failed: {message}")]
    ReplicateFailed { seed: u64, message: String },

    #[error("csv parse error on line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag for CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidContext(_) => "invalid_context",
            Error::EmptyBatch { .. } => "empty_batch",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::Asymmetric(_) => "asymmetric",
            Error::Model(_) => "model",
            Error::InsufficientDiversity(_) => "insufficient_diversity",
            Error::RadiusViolation(_) => "radius_violation",
            Error::UnavailableAction(_) => "unavailable_action",
            Error::MissingPredictions => "missing_predictions",
            Error::EmptyInput(_) => "empty_input",
            Error::NonPositive(_) => "non_positive",
            Error::Config { .. } => "invalid_value",
            Error::UnknownKey(_) => "unknown_key",
            Error::TypeMismatch { .. } => "type_mismatch",
            Error::ReplicateFailed { .. } => "replicate_failed",
            Error::Csv { .. } => "csv",
            Error::Io(_) => "io",
        }
    }

    /// The configuration key this error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::Config { key, .. } | Error::TypeMismatch { key, .. } => Some(key),
            Error::UnknownKey(key) => Some(key),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
