use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff: {0}")]
    Cutoff(String),
    #[error("exceptional point: p = {p}, V = {v}")]
    ExceptionalPoint { p: i64, v: f64 },
    #[error("regime boundary: V = {0} is not allowed")]
    RegimeBoundary(f64),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}
