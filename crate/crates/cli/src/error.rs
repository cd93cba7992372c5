//! Error classes and their exit codes.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or missing input data.
    Data,
    /// Bad configuration or arguments.
    Config,
    /// The model endpoint could not be reached or kept failing.
    Transport,
}

impl ErrorClass {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Data => 1,
            ErrorClass::Config => 2,
            ErrorClass::Transport => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError {
            class: self.class,
            error: self.error.context(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn data<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError {
        class: ErrorClass::Data,
        error: e.into(),
    }
}

pub fn config<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError {
        class: ErrorClass::Config,
        error: e.into(),
    }
}

pub fn transport<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError {
        class: ErrorClass::Transport,
        error: e.into(),
    }
}
