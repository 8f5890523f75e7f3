use std::path::PathBuf;

/// Errors produced by the pipeline library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Unsupported or malformed container header.
    #[error("format error: {0}")]
    Format(String),

    /// Files disagree with each other or with the manifest.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Data was produced under a different blade order or architecture.
    #[error("incompatible data: {0}")]
    Incompatible(String),

    /// A caller broke a documented precondition (shapes, ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by input data rather than the runtime.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Format(_)
                | Error::Integrity(_)
                | Error::Incompatible(_)
                | Error::Validation(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
