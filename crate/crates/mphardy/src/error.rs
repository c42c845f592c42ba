//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("definite-matrix error: {0}")]
    DefiniteMatrix(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singularity error: {0}")]
    Singularity(String),
    #[error("divergent-moment error: {0}")]
    DivergentMoment(String),
    #[error("inequality violation: {0}")]
    InequalityViolation(String),
    #[error("identity violation: {0}")]
    IdentityViolation(String),
    #[error("chain violation in {display}: {detail}")]
    ChainViolation { display: String, detail: String },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("positivity violation: {0}")]
    PositivityViolation(String),
    #[error("scheme-consistency error: {0}")]
    SchemeConsistency(String),
    #[error("config error at `{path}`: {detail}")]
    Config { path: String, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
