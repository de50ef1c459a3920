use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown catalog id `{0}`")]
    UnknownFunction(String),

    #[error("cannot certify truncation tolerance {tol:e}: {reason}")]
    Truncation { tol: f64, reason: String },

    #[error("aliasing bound {bound:e} exceeds tolerance {tol:e}")]
    Aliasing { bound: f64, tol: f64 },

    #[error("cannot certify shell tail below {tol:e}: {reason}")]
    TailNotCertified { tol: f64, reason: String },

    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudget(String),

    #[error("outside theorem range: {0}")]
    OutOfRange(String),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
