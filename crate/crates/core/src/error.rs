use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of the interaction function ({domain})")]
    Domain { value: f64, domain: &'static str },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("adaptive quadrature did not reach tolerance {tolerance:e} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tolerance: f64 },
    #[error("interaction function has no usable derivative")]
    DerivativeUnavailable,
    #[error("malformed forest: {0}")]
    MalformedForest(&'static str),
    #[error("environment trajectory does not cover [0, {needed}] (covers [0, {covered}])")]
    GridMismatch { needed: f64, covered: f64 },
    #[error("sample set is empty or too small for the statistic")]
    EmptySample,
}
