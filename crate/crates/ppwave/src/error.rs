//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by parsing, evaluation, integration, and the geometric
/// operations built on top of them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Syntax error in an expression, with the byte offset of the offending token.
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// An identifier that is neither a coordinate nor a bound constant.
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdent { name: String, offset: usize },

    /// A transverse variable index above the declared dimension.
    #[error("variable x{index} exceeds transverse dimension n = {n} (offset {offset})")]
    VarOutOfRange {
        index: usize,
        n: usize,
        offset: usize,
    },

    /// Evaluation left the real domain (log of a non-positive number, etc.).
    #[error("domain error: {0}")]
    Domain(String),

    /// A u-derivative of a quadratic profile was requested without an exact
    /// derivative map for S.
    #[error("derivative map required: quadratic profile has no exact dS/du")]
    MissingSdot,

    /// Too many derivatives requested (more than three in x or one in u).
    #[error("derivative order not supported: {0}")]
    DerivativeOrder(String),

    /// The profile is not in normal form (H(u,0) or its transverse gradient
    /// does not vanish along the axis).
    #[error("profile not in normal form: max |H(u,0)| = {max_h:.3e}, max |grad H(u,0)| = {max_grad:.3e}")]
    NotNormalForm { max_h: f64, max_grad: f64 },

    /// Residual grid too small to determine the Killing algebra.
    #[error("grid too small: {rows} usable residual rows for {unknowns} unknowns")]
    GridTooSmall { rows: usize, unknowns: usize },

    /// Query outside the range covered by an integrated trajectory.
    #[error("u = {u} outside trajectory coverage [{min}, {max}]")]
    OutOfRange { u: f64, min: f64, max: f64 },

    /// Adaptive step size shrank below the representable limit.
    #[error("integrator step-size underflow at u = {0}")]
    StepUnderflow(f64),

    /// Operation requires a plane wave.
    #[error("operation requires a plane wave profile: {0}")]
    NotPlaneWave(String),

    /// Mismatched operands (different metrics, dimensions, or u-ranges).
    #[error("incompatible operands: {0}")]
    Incompatible(String),

    /// A precondition on a Killing-field operation failed.
    #[error("{0}")]
    Precondition(String),

    /// Bracket closure or constancy check failed beyond tolerance.
    #[error("bracket consistency violation: {what} = {magnitude:.3e}")]
    BracketConsistency { what: String, magnitude: f64 },

    /// Invalid input data (non-symmetric S, non-orthogonal A, bad domain, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
