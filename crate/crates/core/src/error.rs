use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("symmetric eigendecomposition did not converge (order {order})")]
    EigenFailure { order: usize },

    #[error("matrix is materially indefinite: eigenvalue {eigenvalue:e} below -{threshold:e}")]
    Indefinite { eigenvalue: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("evaluation error in `{node}`: {message}")]
    Domain { node: String, message: String },

    #[error("point is infeasible (phi = {phi:e}, tolerance {tol:e})")]
    Infeasible { phi: f64, tol: f64 },

    #[error("sigma-term guard: block {block} has first component {value:e} at or below tolerance")]
    SigmaGuard { block: usize, value: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("report error: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }
}
