use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {what} (threshold {threshold})")]
    Precondition { what: String, threshold: f64 },
    #[error("numerical convergence failure: estimate {estimate}, error bound {error}")]
    NoConvergence { estimate: f64, error: f64 },
    #[error("capacity exceeded: {what} (limit {limit})")]
    Capacity { what: &'static str, limit: usize },
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(what: impl Into<String>, threshold: f64) -> Self {
        Error::Precondition { what: what.into(), threshold }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
