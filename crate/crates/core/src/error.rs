use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid rank policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("recursion did not terminate within {cap} steps")]
    DCapExceeded { cap: usize },

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("no eigenvalue at 1")]
    NoUnitEigenvalue,

    #[error("pencil numerically singular on the contour at node {node} (condition {condition:e})")]
    SingularOnCircle { node: usize, condition: f64 },

    #[error("identity certificate failed: residual {residual:e} exceeds {threshold:e} at radius {radius}")]
    RadiusTooLarge { radius: f64, residual: f64, threshold: f64 },

    #[error("Im C_0 does not match the attractor (residual {residual:e})")]
    AttractorMismatch { residual: f64 },

    #[error("series too short: {len} < {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("shock range starts at {t_min}, need t_min <= {required}")]
    InsufficientPresample { t_min: i64, required: i64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
