use thiserror::Error;

pub type Result<T, E = KdaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KdaError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("multi-index has degree {got}, expected {expected}")]
    DegreeMismatch { expected: u32, got: u32 },

    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: u32, max: u32 },

    #[error("within-class matrix is numerically singular with ridge {ridge:e} (condition estimate {condition:e})")]
    SingularWithinClass { ridge: f64, condition: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("class {0} has no observations")]
    EmptyClass(u8),

    #[error("threshold has not been chosen for this model")]
    ThresholdUnset,

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl KdaError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            KdaError::DimensionMismatch { .. } => "dimension_mismatch",
            KdaError::DegreeMismatch { .. } => "degree_mismatch",
            KdaError::DegreeTooLarge { .. } => "degree_too_large",
            KdaError::SingularWithinClass { .. } => "singular_within_class",
            KdaError::NotPositiveDefinite => "not_positive_definite",
            KdaError::EmptyClass(_) => "empty_class",
            KdaError::ThresholdUnset => "threshold_unset",
            KdaError::ZeroVariance { .. } => "zero_variance",
            KdaError::Parse { .. } => "parse",
            KdaError::InvalidArgument(_) => "invalid_argument",
            KdaError::Io(_) => "io",
            KdaError::Json(_) => "json",
        }
    }
}
