use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("resource guard exceeded: {0}")]
    Guard(String),

    #[error("no threshold bracket: {0}")]
    NoBracket(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
