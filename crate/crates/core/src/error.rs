use thiserror::Error;

/// Errors raised by constructors and operations across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame is not orthonormal (max deviation {deviation:.3e})")]
    NonOrthonormalFrame { deviation: f64 },

    #[error("unbounded body: {0}")]
    Unbounded(String),

    #[error("gluing changes the projection onto the plane (discrepancy {discrepancy:.3e})")]
    ProjectionChanged { discrepancy: f64 },

    #[error(
        "plane is not an area-minimizing projection of the base body \
         (area {area:.6} vs best found {best:.6}); gluing and cutting must preserve a minimizing projection"
    )]
    NotMinimizing { area: f64, best: f64 },

    #[error("cut region is not contained in the projection of the body (excess {excess:.3e})")]
    RegionNotContained { excess: f64 },

    #[error("density and body do not share a generating ellipsoid")]
    ProvenanceMismatch,

    #[error("program too large: estimated {estimated_bytes} bytes exceeds cap {cap_bytes}; {advice}")]
    ProgramTooLarge {
        estimated_bytes: usize,
        cap_bytes: usize,
        advice: String,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
