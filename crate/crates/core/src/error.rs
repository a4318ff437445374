use std::path::PathBuf;

/// Errors raised by the numerical core.
///
/// `Domain` covers inputs that are well-formed but outside where a model is
/// defined (points inside a source, zero variance, too few pulses).
/// `Config` covers malformed parameters and unsupported configurations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("segment {segment}: {source}")]
    Segment {
        segment: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the numbers themselves rather than by how
    /// the run was configured.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Domain(_) => true,
            Error::Segment { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
