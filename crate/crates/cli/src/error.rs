//! CLI error families with stable exit codes.

use std::fmt;
use std::path::PathBuf;

use cogload_core::CoreError;

/// Exit codes: 2 configuration, 3 data/parse, 4 model/training, 5 io.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Malformed { path: PathBuf, line: usize, msg: String },
    Data(String),
    Core(CoreError),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Malformed { .. } | CliError::Data(_) => 3,
            CliError::Core(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Malformed { path, line, msg } => {
                write!(f, "malformed file {}:{line}: {msg}", path.display())
            }
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "io error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(msg) => CliError::Config(msg.to_string()),
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
