use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// Numerical failures (`NotPositiveDefinite`, `SingularMatrix`) signal filter
/// divergence or unobservable geometry to the caller; the experiment layer
/// converts them into data (failed trials, `UNOBSERVABLE` bound values)
/// rather than aborting a run.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A covariance-like matrix could not be factorized even after the
    /// escalating jitter policy.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Inversion requested for a matrix whose numeric rank is deficient.
    #[error("matrix is numerically singular (rank {rank} < {dim})")]
    SingularMatrix { rank: usize, dim: usize },

    /// Sensor and target coincide; the dipole field is undefined at r = 0.
    #[error("degenerate geometry: sensor-target distance is zero")]
    DegenerateGeometry,

    /// The field norm vanishes, so its gradient is undefined.
    #[error("zero field: norm gradient is undefined")]
    ZeroField,

    /// A geometric construction (grid, trajectory) received invalid inputs.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A configuration value violates its contract; the message names the field.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A vector or matrix has the wrong dimension for the operation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
