use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the coordinate domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A metric, barrier, grid or initial profile could not be constructed.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Input is well formed but does not satisfy an operation's precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("integrity error in {file}: {reason}")]
    Integrity { file: String, reason: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
