use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rejected input: non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("corrupted spectrum: Hermitian symmetry violated (relative residual {residual:e})")]
    CorruptedSpectrum { residual: f64 },

    #[error("configuration error: expected {expected} points, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed to reach tolerance {tol:e}: estimate {estimate} with error {error:e}")]
    QuadratureFailure { estimate: f64, error: f64, tol: f64 },

    #[error("calibration failed: relative residual {residual:e} exceeds {limit:e}")]
    CalibrationFailure { residual: f64, limit: f64 },

    #[error("non-finite state after step at t = {t}")]
    BlowupOverflow { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
