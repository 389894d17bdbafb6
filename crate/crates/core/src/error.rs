use thiserror::Error;

/// Errors produced by the sensing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numeric routine could not produce a trustworthy result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The sample covariance collapsed to a singular matrix, so the
    /// eigenvalue-ratio statistics are undefined.
    #[error("degenerate covariance: smallest eigenvalue {lambda_min:e} is not positive")]
    DegenerateCovariance { lambda_min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
