use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{kind} index {index} out of range (len {len})")]
    Index {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, gap {gap:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        gap: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn index(kind: &'static str, index: usize, len: usize) -> Self {
        Error::Index { kind, index, len }
    }
}
