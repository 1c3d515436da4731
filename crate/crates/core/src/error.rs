use thiserror::Error;

/// Errors raised by the de-drifting toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "wavelet level {requested} is infeasible for a signal of {len} samples \
         (maximum feasible level is {max})"
    )]
    InfeasibleLevel {
        requested: usize,
        max: usize,
        len: usize,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
