use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// An input file could not be read or parsed.
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: surfdraw_core::Error },
    #[error("{0}")]
    Usage(String),
    /// A processing stage failed on valid inputs.
    #[error("{0}")]
    Stage(String),
    #[error("{}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>, source: impl Into<surfdraw_core::Error>) -> Self {
        CliError::Input { path: path.into(), source: source.into() }
    }

    /// 2 for bad invocations or inputs, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input { .. } | CliError::Usage(_) => 2,
            CliError::Stage(_) | CliError::Output { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
