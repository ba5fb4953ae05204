use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular to working precision: {0}")]
    Singular(String),

    #[error(
        "Newton iteration did not converge at step {step} after {iterations} iterations \
         (last residual {residual:.3e})"
    )]
    StepFailed { step: usize, iterations: usize, residual: f64 },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config { line: None, message: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
