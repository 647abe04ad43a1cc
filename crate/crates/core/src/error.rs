use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: configuration problems (2),
/// numerical failures (3) and resolution-guard trips (4).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, inputs, or file contents.
    #[error("config error: {0}")]
    Config(String),
    /// A solver failed to converge or a numerical invariant was violated.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A resolution guard tripped (grid too small, spectral tail too large).
    #[error("resolution guard: {0}")]
    Resolution(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
