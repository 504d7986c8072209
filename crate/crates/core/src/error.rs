use thiserror::Error;

/// Errors raised by the geometric and dynamical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix determinant {0} is not positive")]
    InvalidElement(f64),
    #[error("reduction did not terminate after {0} steps")]
    NonTermination(usize),
    #[error("element is not hyperbolic (|trace| = {0})")]
    NotHyperbolic(f64),
    #[error("point lies outside the chart (reason: {0})")]
    OutOfChart(&'static str),
    #[error("singular configuration: {0}")]
    Singular(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("implicit integrator diverged after {0} Newton iterations")]
    IntegratorDivergence(usize),
    #[error("numerical blow-up at iteration {0}")]
    NumericalBlowup(usize),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("perturbation supports overlap: {0}")]
    SupportOverlap(String),
    #[error("band index {0} is not a positive integer")]
    BadIndex(i64),
    #[error("z = {z} does not lie in band {band}")]
    BandMismatch { band: usize, z: f64 },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
