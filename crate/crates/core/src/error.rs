use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension n = {n} is not supported: {reason}")]
    Dimension { n: usize, reason: &'static str },

    #[error("{name} = {value} is out of range: expected {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matrix is not special orthogonal (deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("frame is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("eigenvalue solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("work budget exceeded: {what} needs {needed}, limit {limit}")]
    Budget {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "heat time t = {t} is below the series minimum t_min = {t_min} for n = {n}; use the SDE sampler"
    )]
    HeatTimeTooSmall { n: usize, t: f64, t_min: f64 },

    #[error("SDE integration unstable: {0}")]
    Unstable(String),

    #[error("parse error: {0}")]
    Parse(String),
}
