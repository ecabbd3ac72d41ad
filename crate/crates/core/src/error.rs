use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: n = {n} exceeds the configured ceiling {ceiling}")]
    ResourceLimit {
        what: &'static str,
        n: u64,
        ceiling: u64,
    },

    #[error("insufficient oscillation: found {peaks} peak(s), need at least 2")]
    InsufficientOscillation { peaks: usize },

    #[error("too few points: {found} selected, need at least {needed}")]
    TooFewPoints { found: usize, needed: usize },

    #[error("wave model violation: {0}")]
    ModelViolation(String),

    #[error("degenerate marginal: distance variance {0:e} is not positive")]
    DegenerateMarginal(f64),

    #[error(
        "insufficient quadrature budget: error bound {bound:e} exceeds tolerance {tolerance:e}"
    )]
    InsufficientQuadrature { bound: f64, tolerance: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
