use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped so callers can map them onto process exit codes:
/// configuration mistakes, data problems, and numeric aborts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: String, detail: String },

    #[error("domain error in {op}: {detail}")]
    Domain { op: String, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at row {row}: {detail}")]
    Parse { row: usize, detail: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Shape { op: op.into(), detail: detail.into() }
    }

    pub(crate) fn domain(op: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Domain { op: op.into(), detail: detail.into() }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidArgument(detail.into())
    }

    pub(crate) fn data(detail: impl Into<String>) -> Self {
        Error::Data(detail.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
