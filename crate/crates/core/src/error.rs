use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate measurement gradient: {0}")]
    DegenerateGradient(String),

    #[error("covariance not factorizable: {0}")]
    Covariance(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate particle weights: {0}")]
    DegenerateWeights(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degenerate covariance diagonal for {0}")]
    DegenerateCovariance(String),

    #[error("no filter available for switching")]
    NoFilter,

    #[error("schema error: missing column `{0}`")]
    Schema(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("contract expired at step {0}")]
    ContractExpired(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Input errors map to exit code 1; everything else is numerical.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Schema(_)
                | Error::Format { .. }
                | Error::InsufficientData(_)
                | Error::Config(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
