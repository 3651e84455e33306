use thiserror::Error;

/// Errors raised by the model, transform, likelihood and sampler layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state component {component} = {value} lies outside the model domain")]
    Domain { component: usize, value: f64 },

    #[error("non-finite value in {context} at index {index}")]
    Numerical { context: &'static str, index: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("matrix is not positive definite (leading minor / pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: row {row}: {message}")]
    Data {
        path: String,
        row: usize,
        message: String,
    },

    #[error("simulation left the domain (seed {seed}): {message}")]
    Simulation { seed: u64, message: String },

    #[error("chain initialization failed: {0}")]
    Initialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Config { .. } | Error::Data { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
