use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model, power or grid parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// A call whose preconditions do not hold (empty input, inconsistent rates).
    #[error("usage error: {0}")]
    Usage(String),
    #[error("threshold {rate} bits is unreachable: accumulable information is bounded by {sup} bits within {t_max} blocks")]
    UnreachableThreshold { rate: f64, sup: f64, t_max: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
