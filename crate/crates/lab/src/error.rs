use std::path::PathBuf;

use radial_lab::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input, located by a JSON pointer into the document.
    #[error("{pointer}: {message}", pointer = if .pointer.is_empty() { "/" } else { .pointer })]
    Schema { pointer: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lab(#[from] LabError),
}

impl CliError {
    pub fn schema(pointer: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Schema {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for failed computations.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lab(LabError::InvalidConfig(_) | LabError::Argument(_) | LabError::GridMismatch) => 2,
            CliError::Lab(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
