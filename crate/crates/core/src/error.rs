use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input is well-formed but does not satisfy an operation's
    /// precondition (e.g. too few units in a group).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The data cannot support the requested computation, e.g. a bootstrap
    /// that keeps producing an empty treatment group.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// The variance estimate used to studentize a statistic is not positive.
    #[error("degenerate variance estimate: zeta_hat = {0}")]
    DegenerateVariance(f64),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
