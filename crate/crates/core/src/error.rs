use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix A[{index}] is not skew-symmetric (max asymmetry {asymmetry:.3e})")]
    NonSkew { index: usize, asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("point coordinates must be finite")]
    NonFinite,

    #[error("horizontal line direction must be nonzero")]
    ZeroDirection,

    #[error("Hormander condition fails (structure rank {rank} < {ell})")]
    HormanderFails { rank: usize, ell: usize },

    #[error("invalid exponential count p = {p}: {reason}")]
    BadP { p: usize, reason: String },

    #[error("cone hypothesis fails: ball around the tip direction is not inside the set")]
    HypothesisFails,

    #[error("points are not horizontally aligned (vertical discrepancy {discrepancy:.3e})")]
    NotAligned { discrepancy: f64 },

    #[error("coordinates outside the graph domain")]
    OutOfDomain,

    #[error("no boundary crossing found along the probe lines")]
    BoundaryNotFound,

    #[error("boundary samples are rank-deficient, cannot fit a plane")]
    FitDegenerate,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
