//! Process-level error taxonomy: every failure maps to an exit code and a
//! machine-readable category printed on stderr.

use std::fmt;

/// Errors raised while reading or writing the on-disk formats.
#[derive(Debug)]
pub enum StoreError {
    /// Magic string, format integer, or internal geometry of the file does
    /// not match what this build writes.
    FormatVersionMismatch(String),
    /// Checksum failure or a structurally broken file.
    CorruptFile(String),
    IoFailure(std::io::Error),
}

impl fmt::Display for StoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreError::FormatVersionMismatch(m) => write!(f, "format/version mismatch: {m}"),
            StoreError::CorruptFile(m) => write!(f, "corrupt file: {m}"),
            StoreError::IoFailure(e) => write!(f, "io failure: {e}"),
        }
    }
}

impl std::error::Error for StoreError {}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::IoFailure(e)
    }
}

/// Top-level command error. The categories mirror the exit codes: usage
/// errors exit 2, data errors 3, numerical failures 4.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m)) = self;
        write!(f, "{m}")
    }
}

impl std::error::Error for CliError {}

impl From<svmp_core::Error> for CliError {
    fn from(e: svmp_core::Error) -> Self {
        match e {
            svmp_core::Error::NonFiniteInput | svmp_core::Error::NotPsd { .. } => {
                CliError::Numeric(e.to_string())
            }
            svmp_core::Error::InvalidSpec(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io failure: {e}"))
    }
}
