use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation needed more symbol window than the point carries.
    #[error("resolution exhausted: {0}")]
    ResolutionExhausted(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("unsupported system: {0}")]
    UnsupportedSystem(String),

    #[error("invalid pair: {0}")]
    InvalidPair(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("coverage error: {0}")]
    CoverageError(String),

    /// Configuration rejected before any computation ran. `field` names the
    /// violated constraint so callers can surface it verbatim.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
