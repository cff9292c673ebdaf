use thiserror::Error;

/// Errors raised by the lattice, operator, dynamics and probe layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("region is empty: {0}")]
    EmptyRegion(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("Fock dimension {dim} exceeds the configured cap of {cap}")]
    DimensionCap { dim: u128, cap: usize },

    #[error("coupling matrix is not {expected}: entry ({row}, {col}) differs by {deviation:e}")]
    Symmetry {
        expected: &'static str,
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("occupation vector not in basis: {0:?}")]
    UnknownOccupation(Vec<u8>),

    #[error("initial state populates the shell at site {site} (occupation {occupation})")]
    ShellPopulated { site: usize, occupation: u8 },

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("Krylov propagation did not converge (residual estimate {residual:e} at step {tau:e})")]
    KrylovNonConvergence { residual: f64, tau: f64 },

    #[error("operator is not supported in the claimed region: {0}")]
    SupportViolation(String),

    #[error("geometry precondition violated: {0}")]
    Geometry(String),

    #[error("time grid invalid: {0}")]
    TimeGrid(String),

    #[error("operator precondition violated: {0}")]
    OperatorPrecondition(String),

    #[error("decay exponent alpha = {alpha} must exceed d + 1 = {bound}")]
    DecayExponent { alpha: f64, bound: f64 },

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
