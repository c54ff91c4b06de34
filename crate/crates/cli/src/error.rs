use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{failed} of {total} stability cells violate their bound")]
    StabilityRed { failed: usize, total: usize },
    #[error("only {n_eff} replications fall in the event Omega' at n = {n} (need at least 100)")]
    InsufficientOmegaPrime { n: usize, n_eff: usize },
    #[error(transparent)]
    Core(#[from] lepski_core::Error),
}

impl CliError {
    /// 0 success, 2 configuration, 3 stability violation, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::InsufficientOmegaPrime { .. } => 2,
            CliError::StabilityRed { .. } => 3,
            CliError::Io { .. } | CliError::Csv { .. } => 4,
            CliError::Core(e) => match e {
                lepski_core::Error::Io(_) | lepski_core::Error::Csv(_) => 4,
                _ => 2,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
