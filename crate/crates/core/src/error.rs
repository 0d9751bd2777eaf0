use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum GrushinError {
    /// The input lies outside the set where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        /// Best error bound reached before giving up, when one exists.
        achieved: Option<f64>,
    },

    /// An argument violates a precondition that is not about the geometry
    /// itself (grid sizes, empty lists, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The asymptotics of a potential do not match any implemented pattern.
    #[error("unclassified endpoint: {0}")]
    Unclassified(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl GrushinError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        GrushinError::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, achieved: Option<f64>) -> Self {
        GrushinError::Numerical {
            message: msg.into(),
            achieved,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GrushinError::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            GrushinError::InvalidArgument(_) => 2,
            GrushinError::Domain(_) | GrushinError::Unclassified(_) => 3,
            GrushinError::Numerical { .. } => 4,
            GrushinError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, GrushinError>;
