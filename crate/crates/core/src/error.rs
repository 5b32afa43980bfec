use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the inference engine and its I/O surfaces.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("capacity error: space has {cells} cells, oracle limit is {limit}")]
    Capacity { cells: u128, limit: u128 },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("ingestion error at row {row}, column '{column}': {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
