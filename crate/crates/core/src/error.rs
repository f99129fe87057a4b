use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid timestep {0} s (expected 0 < dt <= 0.1)")]
    InvalidTimestep(f64),

    #[error("gaze sample is not valid, no classification")]
    NoClassification,

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("script line {line}: {message}")]
    Script { line: u64, message: String },

    #[error("scenario: {0}")]
    Scenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
