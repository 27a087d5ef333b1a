use thiserror::Error;

/// Errors produced by system construction, recurrence scans and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("measure incompatible with system: {0}")]
    Incompatible(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("symbol window exhausted: {0}")]
    WindowExhausted(String),

    #[error("empty word")]
    EmptyWord,

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all observations censored: {0}")]
    AllCensored(String),

    #[error("empty ball at radius {radius}: shrink the ladder")]
    EmptyBall { radius: f64 },

    #[error("missing report: {0}")]
    MissingReport(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
