use std::fmt::Display;

use thiserror::Error;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Success = 0,
    Validation = 1,
    Runtime = 2,
    Verification = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or input records.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("runtime error: {0:#}")]
    Runtime(#[from] anyhow::Error),
    /// At least one oracle check failed.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn validation(msg: impl Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::Validation,
            CliError::Runtime(_) => ExitCode::Runtime,
            CliError::Verification(_) => ExitCode::Verification,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
