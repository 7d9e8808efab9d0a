use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed RIFF/WAVE structure.
    #[error("malformed wav: {0}")]
    Format(String),

    #[error("unsupported wav {field}: {value}")]
    UnsupportedFormat { field: &'static str, value: String },

    /// An input violates a pipeline contract (e.g. a clip that is not 30 s at 22,050 Hz).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("numeric fault: {0}")]
    NumericFault(String),

    #[error("batch normalization running statistics are uninitialized; train before inference")]
    UninitializedStats,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("genre {genre:?} has {available} clips but the split needs {required}")]
    Quota {
        genre: String,
        required: usize,
        available: usize,
    },

    #[error("genre {genre:?}: quotas cannot be met without placing one song in both splits")]
    Granularity { genre: String },

    #[error("corrupt container at byte {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },

    #[error("{0} is not implemented in this toolkit")]
    NotImplemented(String),

    /// Artifacts that must agree were produced under different settings.
    #[error("{what} hash mismatch: expected {expected}, found {found}")]
    HashMismatch {
        what: String,
        expected: String,
        found: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
