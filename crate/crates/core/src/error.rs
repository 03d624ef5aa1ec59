use thiserror::Error;

use crate::designer::DesignResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("numerator is neither symmetric nor antisymmetric (deviation {deviation:.3e} > tolerance {tolerance:.1e})")]
    SymmetryViolation { deviation: f64, tolerance: f64 },

    #[error("numerator is identically zero")]
    ZeroNumerator,

    #[error("numerator must have {expected} taps for this channel count, found {found}")]
    NumeratorLength { expected: usize, found: usize },

    #[error("channel count must be at least {min}, got {found}")]
    TooFewChannels { min: usize, found: usize },

    #[error(
        "all-pole core is unstable (a root of the denominator lies on or outside the unit circle)"
    )]
    Unstable,

    #[error("coefficient pair ({k}, {}) has zero energy; the analysis polyphase matrix is singular", .k + .channels)]
    DegeneratePair { k: usize, channels: usize },

    #[error("reconstruction block {block} is singular (determinant {determinant:.3e})")]
    SingularBlock { block: usize, determinant: f64 },

    #[error("requested length {requested} is shorter than the minimum {minimum}")]
    LengthTooShort { requested: usize, minimum: usize },

    #[error("block length {len} is not a multiple of the channel count {channels}")]
    BlockSize { len: usize, channels: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("filter bank is not perfectly reconstructing (residual {residual:.3e}, tolerance {tolerance:.1e})")]
    NotPr { residual: f64, tolerance: f64 },

    #[error("frame is degenerate (lambda_min {lambda_min:.3e}, lambda_max {lambda_max:.3e})")]
    DegenerateFrame { lambda_min: f64, lambda_max: f64 },

    #[error("invalid design spec: {0}")]
    InvalidSpec(String),

    #[error("passband ripple constraint not met: best design has {:.4} dB ripple", .best.passband_ripple_db)]
    InfeasibleSpec { best: Box<DesignResult> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
