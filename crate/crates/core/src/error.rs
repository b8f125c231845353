use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("unsupported dimension n = {n}; supported dimensions are {{3, 4}}")]
    UnsupportedDimension { n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch for {what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} is not positive at {location:?} (value {value:.3e})")]
    NonPositive {
        what: &'static str,
        location: Vec<f64>,
        value: f64,
    },

    #[error("boundary p-mass vanishes; the quotient is undefined")]
    ZeroMass,

    #[error("{0} is only available on the flat ball; pull conformal data back to the flat metric first")]
    NonFlatGeometry(&'static str),

    #[error("state is not a critical point (projected gradient norm {gradient_norm:.3e})")]
    NotCritical { gradient_norm: f64 },

    #[error("Newton iteration failed to converge; residual history {history:?}")]
    NewtonDivergence { history: Vec<f64> },

    #[error("ill-conditioned least-squares fit (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(&'static str),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
