use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("process is not stable (spectral radius {radius:.6} >= {bound:.6})")]
    Unstable { radius: f64, bound: f64 },

    #[error("noise variances must be finite and strictly positive")]
    InvalidNoise,

    #[error("rejection budget of {0} draws exhausted without a stable matrix")]
    RejectionBudgetExhausted(usize),

    #[error("invalid lag: {0}")]
    InvalidLag(String),

    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),

    #[error("not enough observations: {0}")]
    InsufficientSamples(String),

    #[error("rank deficient: smallest singular value {smallest:.3e} vs largest {largest:.3e}")]
    RankDeficient { smallest: f64, largest: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid graph query: {0}")]
    Graph(String),

    #[error("marginal graph did not stabilize between history {0} and {1}")]
    NotStabilized(usize, usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
