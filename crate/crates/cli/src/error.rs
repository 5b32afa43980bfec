use std::fmt;

use catdiff_core::Error;

/// Process exit codes.
pub mod code {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const INGEST: u8 = 3;
    pub const DEGENERATE: u8 = 4;
    pub const IO: u8 = 5;
}

/// Where in a run an error happened. Reading inputs and writing outputs
/// map I/O failures to different exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Compute,
    Output,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: code::USAGE,
            message: message.into(),
        }
    }

    pub fn at(stage: Stage, err: Error) -> Self {
        let code = match (&err, stage) {
            (Error::Degenerate(_), _) => code::DEGENERATE,
            (Error::Ingest { .. } | Error::Format { .. } | Error::Io { .. }, Stage::Input) => code::INGEST,
            (Error::Ingest { .. }, _) => code::INGEST,
            (Error::Format { .. } | Error::Io { .. }, _) => code::IO,
            _ => code::USAGE,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Attaches a stage to a core result.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for catdiff_core::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|e| CliError::at(stage, e))
    }
}
