use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix determinant {det} differs from 1 by more than {tol:e}")]
    NonUnitDeterminant { det: f64, tol: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("complex dilatation modulus {modulus} is not < 1")]
    DilatationOutOfRange { modulus: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("weight is not integrable over the unit disc: {0}")]
    NonIntegrableWeight(String),
    #[error("degenerate triangle {index}: signed area {area:e}")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("nonpositive weight {value} at ({x}, {y})")]
    NonpositiveWeight { value: f64, x: f64, y: f64 },
    #[error("vector has zero mass but positive energy")]
    ZeroMassVector,
    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("mode {mode} out of range (spectrum has {available} modes)")]
    ModeOutOfRange { mode: usize, available: usize },
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    /// Wraps the error with a description of what was being done.
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error, with all context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
