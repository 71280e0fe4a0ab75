use std::fmt;

use thiserror::Error;

/// A single rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source stream (the CSV header is line 1).
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("{} invalid row(s); first: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    InvalidRows(Vec<RowError>),

    #[error("data error: {0}")]
    Data(String),

    /// Not enough signal to fit a model (no positives, a single class, ...);
    /// callers record the month as skipped rather than failing.
    #[error("training skipped: {0}")]
    TrainingSkipped(String),

    #[error("feature assembly: missing propagated column `{0}`")]
    MissingColumn(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
