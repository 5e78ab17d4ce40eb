use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid group element: digit {digit} at index {index} is not below modulus {modulus}")]
    InvalidElement { index: u32, digit: u32, modulus: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("count overflow: {0}")]
    Overflow(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The walk is recurrent (c <= 1) so the potential is infinite.
    #[error("potential is infinite for c = {c} (requires c > 1)")]
    Recurrent { c: f64 },

    #[error("series truncation insufficient: {0}")]
    Truncation(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error:e} > tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    /// Cholesky factorisation failed at the maximum jitter.
    #[error("covariance not positive semidefinite: leading minor {minor} failed at jitter {jitter:e}")]
    NotPsd { minor: usize, jitter: f64 },

    #[error("population exceeded hard cap of {cap} particles")]
    PopulationCap { cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
