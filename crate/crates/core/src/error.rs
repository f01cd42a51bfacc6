use alloc::string::String;

/// Errors raised by the geometry, reprojection, drag and metric kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Tangent basis requested too close to a pole.
    #[error("tangent basis undefined at latitude {lat} rad (pole)")]
    DegenerateBasis { lat: f64 },

    /// Handle and target are coincident or antipodal, so no unique great circle.
    #[error(
        "handle and target do not define a unique great circle (|P_han x P_tar| = {cross_norm:e})"
    )]
    DegenerateGreatCircle { cross_norm: f64 },

    /// Current point is parallel to the great-circle normal.
    #[error("current point projects to zero on the great-circle plane (norm {norm:e})")]
    DegenerateProjection { norm: f64 },

    /// Current point already coincides with the target; the caller should stop.
    #[error("current point coincides with the target")]
    AtTarget,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("distance value {value} outside [0, 1]")]
    InvalidMetric { value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
