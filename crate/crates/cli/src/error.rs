use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no quotes in {0}")]
    EmptyInput(PathBuf),
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Core(ats_core::Error),
}

impl CliError {
    pub fn from_io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(path.to_path_buf())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            }
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::EmptyInput(_) => 2,
            CliError::MissingFile(_) => 3,
            CliError::Config(_) => 4,
            CliError::Insufficient(_) => 5,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }
}

impl From<ats_core::Error> for CliError {
    fn from(e: ats_core::Error) -> Self {
        match e {
            ats_core::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            ats_core::Error::InsufficientData { .. } => CliError::Insufficient(e.to_string()),
            other => CliError::Core(other),
        }
    }
}
