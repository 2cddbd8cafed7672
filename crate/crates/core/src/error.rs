//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only 2 and 3 are supported")]
    UnsupportedDim(usize),

    #[error("grid level {level} out of range for dimension {dim} (max {max})")]
    LevelOutOfRange { dim: usize, level: u32, max: u32 },

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("measure/grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("origin is not an interior point: {0}")]
    OriginNotInterior(String),

    /// A hypothesis required for the inverse problem to be solvable is
    /// violated. The message names the failed hypothesis.
    #[error("admissibility violation: {0}")]
    Admissibility(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
