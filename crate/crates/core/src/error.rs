use alloc::string::String;

/// Errors raised by the predictor and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("bucket enumeration too large: {needed} indices exceed the cap of {cap}")]
    EnumerationTooLarge { needed: f64, cap: u64 },

    #[error("grid of {bits} bits exceeds the cap of {cap} bits; lower the depth or the dimension")]
    GridTooLarge { bits: u128, cap: u128 },

    #[error("grid shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("empty set has no dimension estimate")]
    EmptySet,

    #[error("no intersections observed: window too shallow or regime misclassified")]
    NoIntersections,

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("argument ordering violated: {0}")]
    Ordering(String),

    #[error("regime {0} does not produce intersections")]
    NotHittingRegime(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by a configured resource cap.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            Error::EnumerationTooLarge { .. } | Error::GridTooLarge { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
