use thiserror::Error;

/// Errors raised by the evaluators and certifiers in this crate.
///
/// Report-style operations (certificates, bound sweeps) do not use this type
/// for negative verdicts; they return a report whose verdict says so. Errors
/// are reserved for violated preconditions and numerical breakdowns.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("range exceeded: argument {arg} lies beyond the tabulated limit {limit}")]
    RangeExceeded { arg: f64, limit: f64 },

    #[error("sequence is not in the family of unbounded increasing sequences: {0}")]
    NotUnbounded(String),

    #[error("sequence violates log-convexity at index {0}")]
    NotLogConvex(usize),

    #[error("condition not satisfiable within the tabulated range: {0}")]
    NotSatisfiable(String),

    #[error("truncation not achievable: {0}")]
    TruncationNotAchievable(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureUnstable(String),

    #[error("point lies outside the admissible domain: {0}")]
    OutsideDomain(String),

    #[error("integrability violated at xi = {0:?}")]
    IntegrabilityViolated(Vec<f64>),

    #[error("tail not converged: {0}")]
    TailNotConverged(String),

    #[error("quadrature aliasing: {0}")]
    Aliasing(String),

    #[error("growth bound not witnessed: {0}")]
    NotWitnessed(String),

    #[error("internal formula mismatch: {0}")]
    FormulaMismatch(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
