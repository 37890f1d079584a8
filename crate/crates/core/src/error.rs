use thiserror::Error;

/// Errors raised across the synthesis and verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("(A, B) is not stabilizable: {0}")]
    Stabilizability(String),

    #[error("basis does not span the delayed input kernel: {0}")]
    BasisInsufficient(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("variable `{0}` is not registered with this problem")]
    UnregisteredVariable(String),

    #[error("non-affine term: {0}")]
    NonAffine(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
