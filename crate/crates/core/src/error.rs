use thiserror::Error;

/// Failures raised by the evaluators, oracles and the expansion engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interaction order p = {0} (need p >= 2)")]
    InvalidOrder(u32),

    #[error("closed form not available for p = {0} (only p = 2, 3, 4)")]
    UnsupportedOrder(u32),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        /// Best available estimate when the failure happened mid-computation.
        best_estimate: Option<(f64, f64)>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("size limit exceeded: {0}")]
    Size(String),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            best_estimate: None,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
