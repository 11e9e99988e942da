use thiserror::Error;

/// Errors raised by the polyfix library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    /// A tensor row polynomial vanished or overflowed, so its logarithm is undefined.
    #[error("tensor map is singular at row {row} (row polynomial = {value})")]
    SingularTensor { row: usize, value: f64 },

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no face sample found after {draws} draws")]
    EmptyFace { draws: usize },

    #[error("no periodic orbit found after {iterations} iterations")]
    NoOrbitFound { iterations: usize },

    #[error("point is not periodic with period {period}: defect {defect:e}")]
    NotPeriodic { period: usize, defect: f64 },

    #[error(
        "ambiguous period: orbit points at distance {distance:e} (orbit tolerance {orbit_tol:e})"
    )]
    AmbiguousPeriod { distance: f64, orbit_tol: f64 },

    #[error(
        "no differentiable point found after {retries} retries (last projection defect {defect:e})"
    )]
    NoDifferentiablePoint { retries: usize, defect: f64 },

    #[error("subspace does not have the required structure: defect {defect:e}")]
    StructureMismatch { defect: f64 },

    #[error("linearization violates superposition: residual {residual:e}")]
    LinearityViolation { residual: f64 },

    #[error("fixed point not contained in V(f): defect {defect:e}")]
    ContainmentViolation { defect: f64 },

    #[error("norm must be strictly convex for the affine fixed-set audit")]
    NotStrictlyConvex,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
