use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("integrator rejected step: {0}")]
    StepRejected(String),

    #[error("eigenvector assignment failed: {0}")]
    Assignment(String),

    #[error("numerical halt: {0}")]
    Numerical(String),

    #[error("incompatible configuration: {0}")]
    Config(String),

    #[error("serialization: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure;
