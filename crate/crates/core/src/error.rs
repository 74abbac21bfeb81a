use thiserror::Error;

/// Errors raised by the library. Every variant maps onto a stable,
/// machine-readable category (see [`Error::category`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration error: unitarity residual {residual:.3e} exceeds tolerance {tolerance:.3e}; reduce the time step")]
    Integration { residual: f64, tolerance: f64 },

    #[error("decoding error: {0}")]
    Decoding(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::Integration { .. } => "integration",
            Error::Decoding(_) => "decoding",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "serialization",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
