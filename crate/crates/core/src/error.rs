use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions; `estimate` is the best value reached.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Accuracy { estimate: f64, error_bound: f64 },

    #[error("kernel singularity at coincident points")]
    Singularity,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("time step {dt} exceeds the CFL limit {limit}")]
    StepSize { dt: f64, limit: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
