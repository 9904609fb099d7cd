use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure at t={t}: {msg}")]
    Numerical { t: f64, msg: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{} violation(s):\n  {}", .0.len(), .0.join("\n  "))]
    Violations(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
