//! Pipeline glue behind the `sgmp` command: prior variants, matching and
//! the key=value configuration file.

pub mod config;
pub mod pipeline;

use std::fmt;

/// Error split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments (exit code 2).
    Usage(String),
    /// Unreadable or inconsistent data (exit code 3).
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sgmp::Error> for CliError {
    fn from(e: sgmp::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
