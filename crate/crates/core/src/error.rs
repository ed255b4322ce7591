use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error categories shared by every module. The CLI maps each variant to a
/// distinct exit code, so new variants must be added there as well.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("convergence error: {message}")]
    Convergence {
        message: String,
        trace: Box<crate::nashmoser::IterationTrace>,
    },
    /// An iterate left the trust region; reported in the domain category.
    #[error("domain error: {message}")]
    TrustRegion {
        message: String,
        trace: Box<crate::nashmoser::IterationTrace>,
    },
    #[error("specification error: {0}")]
    Specification(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    /// Iteration trace attached to iteration failures.
    pub fn trace(&self) -> Option<&crate::nashmoser::IterationTrace> {
        match self {
            Error::Convergence { trace, .. } | Error::TrustRegion { trace, .. } => Some(trace),
            _ => None,
        }
    }

    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Domain(_) | Error::TrustRegion { .. } => "domain",
            Error::Solver(_) => "solver",
            Error::Schedule(_) => "schedule",
            Error::Convergence { .. } => "convergence",
            Error::Specification(_) => "specification",
            Error::Io(_) => "io",
        }
    }
}
