//! Crate-wide error type.

/// Errors produced by construction, evaluation and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes are inconsistent (vector dims, matrix shapes, counts).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A row, column or component index is out of range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Requested builtin manifold does not exist.
    #[error("unknown manifold `{name}`; available: {available}")]
    UnknownManifold { name: String, available: String },

    /// Invalid configuration value (gains, radii, initial states, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Two virtual coordinates are within the safe radius; the repulsion
    /// term is undefined there, so this signals a broken run, not a
    /// recoverable state.
    #[error("barrier violation: {0}")]
    BarrierViolation(String),

    /// A numeric quantity left the representable/plausible range
    /// (NaN/Inf state, suspected unbounded partial derivative, ...).
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Textual input (expression or scenario) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}
