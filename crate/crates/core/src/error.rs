use thiserror::Error;

/// Errors produced anywhere in the inversion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid box transform: {0}")]
    InvalidBox(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid gauge vector: {0}")]
    InvalidGauge(String),

    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),

    #[error("problem too large for exhaustive enumeration: {n} bits (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("singular triangular system: diagonal entry {index} is {value}")]
    Singular { index: usize, value: f64 },

    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidBox(_) => "invalid_box",
            Error::OutOfRange(_) => "out_of_range",
            Error::InvalidGauge(_) => "invalid_gauge",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::TooLarge { .. } => "too_large",
            Error::Singular { .. } => "singular",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
