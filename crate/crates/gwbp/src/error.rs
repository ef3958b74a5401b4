use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("applicability error: {condition} fails ({lhs} vs {rhs})")]
    Applicability {
        condition: &'static str,
        lhs: f64,
        rhs: f64,
    },
    #[error("{what} did not converge within {iters} iterations")]
    Convergence { what: &'static str, iters: usize },
    #[error("root bracket failure: {0}")]
    Bracket(String),
    #[error("inconsistent classification: {0}")]
    Inconsistency(String),
    #[error("optimization failure: {0}")]
    Optimization(String),
    #[error("size error: {0}")]
    Size(String),
}

impl Error {
    /// Short machine-readable kind, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Applicability { .. } => "applicability",
            Error::Convergence { .. } => "convergence",
            Error::Bracket(_) => "bracket",
            Error::Inconsistency(_) => "inconsistency",
            Error::Optimization(_) => "optimization",
            Error::Size(_) => "size",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
