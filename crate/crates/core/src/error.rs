use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A time point that must lie in the open orthant touches its boundary.
    #[error("time point {0:?} is not in the interior of the orthant")]
    NotInterior(Vec<f64>),

    /// A boundary formula was requested at an interior time point.
    #[error("time point {0:?} is not on the boundary of the orthant")]
    NotOnBoundary(Vec<f64>),

    #[error("propagator is singular: product of time parameters is zero")]
    SingularPropagator,

    #[error("unsupported space dimension d = {0} (direct kernel evaluation needs d = 1)")]
    UnsupportedDimension(usize),

    /// Quadrature refinement did not settle; carries the last two refinement values.
    #[error(
        "quadrature did not converge: order {coarse_order} gave {coarse}, order {fine_order} gave {fine} (tolerance {tol:e})"
    )]
    Accuracy { coarse_order: usize, coarse: Complex64, fine_order: usize, fine: Complex64, tol: f64 },

    #[error("stencil footprint leaves the domain: {0}")]
    FootprintOutsideDomain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
