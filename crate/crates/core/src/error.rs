use thiserror::Error;

/// Errors raised by the tensor-train algebra and the spectral pipelines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configured size cap (bond dimension, dense length, support size) was exceeded.
    #[error("resource limit exceeded: {what} ({actual} > {limit}){}", step_suffix(.step))]
    ResourceLimit {
        what: String,
        limit: usize,
        actual: usize,
        /// Pipeline step (e.g. component index) at which the limit was hit.
        step: Option<usize>,
    },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// An adaptive procedure stopped before reaching its target accuracy.
    #[error("convergence failure: {message} (achieved estimate {estimate:.3e})")]
    ConvergenceFailure { message: String, estimate: f64 },
}

fn step_suffix(step: &Option<usize>) -> String {
    match step {
        Some(s) => format!(" at step {s}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach a pipeline step index to a resource-limit error; other variants pass through.
    pub fn at_step(self, index: usize) -> Self {
        match self {
            Error::ResourceLimit {
                what,
                limit,
                actual,
                step: None,
            } => Error::ResourceLimit {
                what,
                limit,
                actual,
                step: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
