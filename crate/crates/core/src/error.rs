use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration record failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("simulation diverged at t = {t}: non-finite sample")]
    SimulationOverflow { t: usize },

    #[error("non-finite iterate at ADMM iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
