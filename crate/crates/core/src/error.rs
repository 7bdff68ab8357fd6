use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Construction(String),
    #[error("aliasing: band {band} is not below N/2 = {half}")]
    Aliasing { band: usize, half: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("indeterminate comparison: {0}")]
    Indeterminate(String),
    #[error("coverage failure: {0}")]
    Coverage(String),
    #[error("numeric guard: {0}")]
    NumericGuard(String),
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
