use std::path::{Path, PathBuf};

use maxload_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Usage(String),

    /// A checked property failed.
    #[error("{0}")]
    Violation(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 3 for a violated property, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Violation(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(CoreError::Io(_)) => 4,
            CliError::Core(CoreError::Csv(e)) if e.is_io_error() => 4,
            CliError::Core(_) => 2,
        }
    }
}
