use std::fmt;
use std::path::{Path, PathBuf};

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_PARAMETER: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },
    Parameter(String),
    /// A check failed; the message names it.
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, line: Option<u64>, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Parameter(_) => EXIT_PARAMETER,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Parse {
                path,
                line: Some(line),
                message,
            } => write!(f, "{}:{line}: {message}", path.display()),
            CliError::Parse {
                path,
                line: None,
                message,
            } => write!(f, "{}: {message}", path.display()),
            CliError::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            CliError::Verification(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tautline::Error> for CliError {
    fn from(e: tautline::Error) -> Self {
        match e {
            tautline::Error::InvalidParameter(msg) => CliError::Parameter(msg),
            other => CliError::Verification(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
