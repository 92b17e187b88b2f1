use thiserror::Error;

/// Errors raised by graph construction, solvers and checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("operator shifted by {shift} is not coercive on the domain (measured lambda_1 = {lambda1:.6e})")]
    NotCoercive { lambda1: f64, shift: f64 },

    #[error("numerical failure: {msg}")]
    Numerical { msg: String, dump: Vec<f64> },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input or configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotCoercive { .. } | Error::Numerical { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            msg: msg.into(),
            dump: Vec::new(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
