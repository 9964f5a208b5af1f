//! Pseudo-spectral simulation and verification engine for a nonlocal
//! water-wave equation with half-order dissipation and dispersion,
//!
//! ```text
//! u_t + α u u_x + β u_xxx + ν (Λ^{1/2} + HΛ^{1/2}) u = 0,
//! ```
//!
//! on a periodic interval. Wave breaking (finite-time slope blowup with
//! bounded amplitude) is tracked along characteristics and compared with
//! an explicit two-sided bound on the breaking time.

pub mod certificates;
pub mod characteristics;
pub mod error;
pub mod evolution;
pub mod nonlocal;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;
pub use evolution::EquationSpec;
pub use nonlocal::{calibrate, combined_symbol, Calibration, KernelKind, MultiplierOp, Sign};
pub use spectral::{dealias, GridField, Interpolant, SpectralGrid, Spectrum};

pub type Field64 = GridField<f64>;
pub type Field32 = GridField<f32>;
pub type Grid64 = SpectralGrid<f64>;
pub type Grid32 = SpectralGrid<f32>;
pub type Spectrum64 = Spectrum<f64>;
