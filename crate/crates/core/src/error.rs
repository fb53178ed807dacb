use thiserror::Error;

/// Errors produced anywhere in the shrinkage pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length {len} is not a power of two; truncate or pad the series to 2^J points")]
    NotDyadic { len: usize },

    #[error("primary level {primary} must be below the number of levels {levels}")]
    PrimaryLevel { primary: usize, levels: usize },

    #[error("shape mismatch: expected {expected} coefficients, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("level {level} is outside the detail range {lo}..={hi}")]
    LevelRange { level: usize, lo: usize, hi: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("noise calibration failed: {0}")]
    Calibration(String),

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("unknown {kind} '{name}'; valid values: {valid}")]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("malformed input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
