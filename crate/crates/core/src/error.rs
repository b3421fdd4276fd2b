use thiserror::Error;

use crate::sdr::SdrSolution;

pub type Result<T, E = SnlError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SnlError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid framework: {0}")]
    InvalidFramework(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("descent diverged at iteration {iter} (non-finite loss or gradient)")]
    Diverged { iter: usize },

    #[error(
        "SDP solver did not converge in {} iterations (primal {:.3e}, dual {:.3e})",
        .0.iterations, .0.primal_residual, .0.dual_residual
    )]
    SdrNotConverged(Box<SdrSolution>),

    #[error("radius {r} too large for the annulus guarantee (min side {min_side})")]
    RadiusTooLarge { r: f64, min_side: f64 },

    #[error("configuration `{which}` is not a solution (max edge deviation {deviation:.3e})")]
    NotASolution { which: &'static str, deviation: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
