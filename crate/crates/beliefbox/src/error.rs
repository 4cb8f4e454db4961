use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's domain (precondition).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data failed schema or invariant validation.
    #[error("data error: {0}")]
    Data(String),

    /// A model response could not be parsed into the expected value.
    #[error("parse error: {0}")]
    Parse(String),

    /// The chat backend failed after exhausting its retry budget.
    #[error("backend error: {0}")]
    Backend(String),

    /// Invalid experiment or run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A statistic is undefined for the given inputs (e.g. zero variance).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
