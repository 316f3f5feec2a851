//! Command-line front end for the qbnet engine.
//!
//! Exit codes: 0 success, 1 a check failed or output could not be written,
//! 2 parse error (file or flags), 3 validation error, 4 cap exceeded.

pub mod commands;
pub mod scenario_file;

use std::fmt;

pub use commands::{run, Cli};
pub use scenario_file::{ParseError, ScenarioFile};

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Validation(qbnet::Error),
    CapExceeded(qbnet::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::CapExceeded(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(e) => write!(f, "validation error: {e}"),
            CliError::CapExceeded(e) => write!(f, "cap exceeded: {e} (raise with --cap-override)"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qbnet::Error> for CliError {
    fn from(e: qbnet::Error) -> Self {
        match e {
            qbnet::Error::DimensionOverflow { .. } | qbnet::Error::EnumerationTooLarge { .. } => {
                CliError::CapExceeded(e)
            }
            e => CliError::Validation(e),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e.to_string())
    }
}
