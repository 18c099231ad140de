use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid or inconsistent input configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The DC bias is at or above the pull-in voltage: no stable membrane
    /// equilibrium exists.
    #[error("pull-in: {0}")]
    PullIn(String),

    /// The linearized dynamics has an eigenvalue with non-negative real part,
    /// or the renormalized mechanical frequency is imaginary.
    #[error("unstable: {0}")]
    Unstable(String),

    /// A numerical routine failed to converge or hit a singular system.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::PullIn(_) | Error::Unstable(_) => 3,
            Error::Numerical(_) => 4,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn pull_in(msg: impl Into<String>) -> Self {
        Error::PullIn(msg.into())
    }

    pub(crate) fn unstable(msg: impl Into<String>) -> Self {
        Error::Unstable(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
