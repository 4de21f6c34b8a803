use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent experiment / learner configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called outside its domain.
    #[error("usage error: {0}")]
    Usage(String),
    /// Bad numeric input, e.g. a non-finite reward.
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
