use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical grid or quadrature could not reach the requested accuracy.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("path {path}: {source}")]
    Path {
        path: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
