use thiserror::Error;

/// Error taxonomy shared by every module.
///
/// `Capability` means a jet order beyond what a field or operation supports,
/// `Domain` a mathematically invalid input (non-finite value, wrong
/// dimension), `Geometry` a metric that fails positivity, `Precondition` a
/// violated operation contract, and `Usage` a malformed request (CLI or
/// suite configuration).
#[derive(Debug, Error)]
pub enum Error {
    #[error("jet order {requested} exceeds maximum {max}")]
    Capability { requested: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
