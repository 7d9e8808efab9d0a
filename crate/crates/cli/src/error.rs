use std::path::PathBuf;

use thiserror::Error;

/// A failed command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] genrekit::Error),

    #[error("{path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 1 for I/O and unreadable artifacts, 2 for user or configuration
    /// errors, 3 for numeric faults.
    pub fn exit_code(&self) -> u8 {
        use genrekit::Error as E;
        match self {
            CliError::Core(E::NumericFault(_)) => 3,
            CliError::Core(E::Io { .. } | E::Format(_) | E::UnsupportedFormat { .. } | E::Corrupt { .. }) => 1,
            CliError::Core(_) | CliError::ConfigFile { .. } | CliError::Usage(_) => 2,
        }
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
