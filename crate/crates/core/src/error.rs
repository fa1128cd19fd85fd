use thiserror::Error;

/// Errors raised by the numerical kernels and the scenario front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid parameter (bad size, empty suite, inverted interval, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The Gramian time integral diverges because its weight exponent is at most -1.
    #[error("Gramian time-integral non-integrable: 2(α−1) ≤ −1 (alpha = {alpha})")]
    NonIntegrable { alpha: f64 },

    /// A linear system could not be solved to the requested accuracy.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
