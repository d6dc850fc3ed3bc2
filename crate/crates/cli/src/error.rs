use std::fmt;
use std::process::ExitCode;

use nlsq_core::Error;

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        })
    }

    /// Reclassifies any failure while loading `path` as an input error.
    pub fn reading(path: &str, e: impl fmt::Display) -> CliError {
        CliError::Io(format!("{path}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidDimension(_)
            | Error::OutOfRegime { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidCost(_)
            | Error::InsufficientAngles { .. }
            | Error::GridCoverage(_) => CliError::Usage(msg),
            Error::MalformedInput(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => {
                CliError::Io(msg)
            }
            Error::NonFinite(_)
            | Error::InvalidState(_)
            | Error::DimensionMismatch { .. }
            | Error::TruncationOverflow { .. }
            | Error::SingularSystem { .. }
            | Error::NonPositiveThreshold(_) => CliError::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
