use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the operation's domain (bad dimensions, overlapping terminals, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Lattice too large to index on this platform.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Brute-force enumeration refused because the instance exceeds its guard.
    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
