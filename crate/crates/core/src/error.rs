use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Privacy parameters or sensitivities that no mechanism can be calibrated for.
    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A declared bound (loss range, Lipschitz constant, norm) was broken at runtime.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
