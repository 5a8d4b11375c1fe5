use std::fmt;
use std::process::ExitCode;

/// Failure of a CLI command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or inconsistent configuration (exit 2).
    Config(String),
    /// Non-finite state or another numerical breakdown during a run (exit 3).
    Numeric(String),
    /// File-system failure while reading or writing (exit 2).
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Numeric(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Errors raised while running an already validated scenario.
pub(crate) fn numeric(e: hessflow_core::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Errors raised while turning configuration into core objects; `key` names
/// the offending configuration entry.
pub(crate) fn at(key: &str) -> impl Fn(hessflow_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{key}: {e}"))
}

/// Exit status of a finished command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    DiagnosticFailure,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::DiagnosticFailure => 1,
        }
    }
}

pub fn exit_code(result: &Result<Status, CliError>) -> ExitCode {
    ExitCode::from(match result {
        Ok(s) => s.code(),
        Err(e) => e.exit_code(),
    })
}
