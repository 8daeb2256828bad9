use std::path::PathBuf;

/// Errors raised by the laboratory. Each variant maps onto one CLI exit class.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("endpoint error: r = {r} is inside the guard window before t = {t}")]
    Endpoint { r: f64, t: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
