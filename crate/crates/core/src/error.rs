use thiserror::Error;

/// Errors produced by expression parsing, evaluation, and the geometric
/// operations built on top of them.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Expression text failed to parse. `offset` is the 1-based byte offset
    /// of the offending token (end of input counts as `len + 1`).
    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Evaluation hit an invalid real operation. `subtree` is the printed
    /// form of the innermost offending subexpression.
    #[error("domain error in `{subtree}`: {message}")]
    Domain { subtree: String, message: String },

    /// An index or coordinate count did not match the declared dimension.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },

    /// The metric matrix is not invertible at the requested point.
    #[error("singular metric: |det| = {det:e} is not above {threshold:e}")]
    SingularMetric { det: f64, threshold: f64 },

    /// A field that must depend on the base coordinates only contains a
    /// fiber variable.
    #[error("{context}: field must depend on x only")]
    NotXOnly { context: String },

    /// The symbolic derivative engine was asked to differentiate a field
    /// with an opaque callable backing.
    #[error("symbolic engine requires an expression-backed field ({context})")]
    SymbolicBacking { context: String },

    /// An operation that needs sample points received none.
    #[error("empty sample set")]
    EmptySample,

    /// Rejection sampling could not produce enough valid points.
    #[error("sampling failed: {0}")]
    Sampling(String),

    /// A scenario is structurally invalid (bad box, wrong component count,
    /// canonical connection on a y-dependent metric, ...).
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
