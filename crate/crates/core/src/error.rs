use thiserror::Error;

use crate::arith::{format_rational, Rational};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse `{0}` as an exact rational")]
    ParseRational(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square with at least one row")]
    NotSquare,

    #[error("dimension {0} is outside the supported range 1..=16")]
    UnsupportedDimension(usize),

    #[error("matrix norm {} is not below 1", format_rational(.0))]
    NotContraction(Rational),

    #[error("matrix is singular")]
    Singular,

    #[error("translation vector is too large (max-norm {})", format_rational(.0))]
    TranslationTooLarge(Rational),

    #[error("point is outside the half-open unit cube")]
    OutsideCube,

    #[error("point is outside the translated cube D_b")]
    OutsideTranslatedCube,

    #[error("point is outside the invariant ball of radius {}", format_rational(.0))]
    OutsideBall(Rational),

    #[error("error radius {} exceeded the ceiling {}", format_rational(.radius), format_rational(.ceiling))]
    PrecisionExhausted { radius: Rational, ceiling: Rational },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
