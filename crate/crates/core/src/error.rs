use thiserror::Error;

/// Errors raised across the solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HnaError {
    #[error("polygon is not strictly convex or not counter-clockwise at vertex {0}")]
    NonConvex(usize),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("arclength {0} outside [0, {1})")]
    OutOfRange(f64, f64),
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("real part must be positive, got {0}")]
    NonPositiveRealPart(f64),
    #[error("coincident points")]
    CoincidentPoints,
    #[error("grading parameter {0} outside (0, 1/2)")]
    BadGrading(f64),
    #[error("number of layers must be at least 1")]
    BadLayers,
    #[error("alpha {alpha} must lie in (0, {max})")]
    AlphaOutOfRange { alpha: f64, max: f64 },
    #[error("basis index {0} out of range")]
    BadIndex(usize),
    #[error("matrix is singular at pivot {0}")]
    SingularMatrix(usize),
    #[error("obstacles overlap or touch")]
    ZeroSeparation,
    #[error("point lies inside or too close to a scatterer")]
    PointInsideScatterer,
    #[error("reference has zero norm")]
    ZeroReference,
    #[error("component {0} is not star-shaped with respect to its centre")]
    NotStarShaped(usize),
    #[error("unknown scene '{0}'")]
    UnknownScene(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, HnaError>;
