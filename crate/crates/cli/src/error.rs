use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Compute(#[from] lingam_order::Error),
}

impl CliError {
    /// 1 for computation failures, 2 for usage and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl ToString) -> Self {
        CliError::Format { path: path.to_path_buf(), msg: msg.to_string() }
    }

    pub fn config(path: &Path, msg: impl ToString) -> Self {
        CliError::Config { path: path.to_path_buf(), msg: msg.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
