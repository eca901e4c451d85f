/// Errors raised by the solver library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A constructor argument violates its precondition.
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    Parameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// An operation was called on a state that violates its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical procedure failed to converge or produced an invalid value.
    #[error("numerical failure in {what}: {diagnostics}")]
    Numerical { what: &'static str, diagnostics: String },

    /// Input lies in an excluded region (e.g. the measure-zero set K = 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A reconstruction grid cannot represent the state it is asked to hold.
    #[error("grid error: {0}")]
    Grid(String),

    /// A serialized table does not match the environment it is loaded into.
    #[error("fingerprint mismatch: stored {stored}, expected {expected}")]
    Fingerprint { stored: String, expected: String },

    /// Malformed table or series file.
    #[error("parse error: {0}")]
    Parse(String),
}
