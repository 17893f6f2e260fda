use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid circuit file {path}: {reason}")]
    Circuit { path: PathBuf, reason: String },
    #[error("{0} is not supported for this model")]
    Unsupported(&'static str),
    #[error("{failed} of {total} seeds failed")]
    SeedsFailed { failed: usize, total: usize },
    #[error(transparent)]
    Core(#[from] dqs_core::DqsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::IntoInnerError<csv::Writer<Vec<u8>>>> for RunnerError {
    fn from(e: csv::IntoInnerError<csv::Writer<Vec<u8>>>) -> Self {
        RunnerError::Io(e.into_error())
    }
}

pub type RunnerResult<T> = std::result::Result<T, RunnerError>;
