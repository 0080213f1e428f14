use crate::minkowski::CausalKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("the zero vector has no causal class")]
    ZeroVector,
    #[error("degenerate tangent basis")]
    DegenerateBasis,
    #[error("plane is {0:?}, expected a timelike plane")]
    NotTimelike(CausalKind),
    #[error("invalid normal frame: {0}")]
    InvalidFrame(String),
    #[error("invalid projection: {0}")]
    InvalidProjection(String),
    #[error("matrix is not in the image of q: {0}")]
    NotInImage(String),
    #[error("velocity is not a unit vector (|v| = {0})")]
    NonUnitVelocity(f64),
    #[error("matrix is not a Lorentz transformation (defect {0:e})")]
    NotLorentz(f64),
    #[error("test family is empty")]
    EmptyFamily,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tangent plane is not timelike at the evaluation point")]
    NullTangent,
    #[error("frame is not differentiable at the evaluation point")]
    FrameNotDifferentiable,
    #[error("range condition violated (defect {0:e})")]
    RangeCondition(f64),
    #[error("parameter patch touches the singular set")]
    SingularPatch,
    #[error("period mismatch: {0} vs {1}")]
    PeriodMismatch(f64, f64),
    #[error("curve speed {0} exceeds 1")]
    SpeedViolation(f64),
    #[error("closure root-find failed after {0} attempts")]
    ClosureFailed(usize),
    #[error("spatial support exceeds radius {0}")]
    UnboundedSupport(f64),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
