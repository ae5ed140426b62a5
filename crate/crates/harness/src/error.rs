use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) => 1,
        }
    }
}

impl From<tsiv::Error> for HarnessError {
    fn from(e: tsiv::Error) -> Self {
        use tsiv::Error as E;
        match e {
            E::Parse(_)
            | E::DimensionMismatch(_)
            | E::InvalidLag(_)
            | E::InvalidIntervention(_)
            | E::InvalidNoise
            | E::InsufficientSamples(_)
            | E::Unsupported(_)
            | E::Graph(_) => HarnessError::Config(e.to_string()),
            _ => HarnessError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}
