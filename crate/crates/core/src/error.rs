use thiserror::Error;

/// Errors raised by the solvers, probes and certificate builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample in component {component}")]
    NonFinite { component: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("blow-up during Duhamel evaluation at node {node} (t = {time})")]
    DuhamelBlowUp { node: usize, time: f64 },

    #[error("local existence not certified below T_min = {t_min} (last measured ratio {last_ratio})")]
    NoContraction { t_min: f64, last_ratio: f64 },

    #[error("trajectory blown up at t = {0}")]
    BlownUp(f64),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
