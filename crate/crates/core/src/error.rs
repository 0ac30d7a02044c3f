use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("missing channel '{0}'")]
    MissingChannel(String),
    #[error("trace horizon too short: formula needs {needed} s, trace covers {available} s")]
    Horizon { needed: f64, available: f64 },
    #[error("port mismatch: {0}")]
    PortMismatch(String),
    #[error("numerical divergence at t = {time}")]
    Divergence { time: f64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
