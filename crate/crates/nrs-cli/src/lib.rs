//! Library surface of the `nrs` command-line tool, exposed so integration
//! tests can drive the commands in-process.

pub mod commands;
pub mod config;

use std::fmt;

/// Command outcomes map to process exit codes: usage errors exit 1,
/// runtime failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(err) => write!(f, "error: {err:#}"),
        }
    }
}

impl From<nrs_core::NrsError> for CliError {
    fn from(err: nrs_core::NrsError) -> Self {
        CliError::Runtime(err.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
