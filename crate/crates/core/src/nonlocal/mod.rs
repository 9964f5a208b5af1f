//! The half-order operators `Λ^{1/2}` and `HΛ^{1/2}` as Fourier multipliers,
//! their singular-integral reference, and the calibration tying the two.
//!
//! Canonical symbols, in the grid's Fourier convention:
//!
//! ```text
//! Λ^{1/2}   : |ξ|^{1/2}
//! HΛ^{1/2}  : s · i · sgn(ξ) · |ξ|^{1/2}
//! ```

pub mod calibration;
pub mod quadrature;

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EquationSpec;
use crate::scalar::Real;
use crate::spectral::{GridField, SpectralGrid};

pub use calibration::{calibrate, Calibration};
pub use quadrature::{pv_quadrature, QuadratureEstimate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    LambdaHalf,
    HilbertLambdaHalf,
}

impl KernelKind {
    pub const ALL: [KernelKind; 2] = [KernelKind::LambdaHalf, KernelKind::HilbertLambdaHalf];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::LambdaHalf => "lambda_half",
            KernelKind::HilbertLambdaHalf => "hilbert_lambda_half",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// Sign of the dispersive symbol that [`calibrate`] returns for
/// [`KernelKind::HilbertLambdaHalf`]; both kernels carry the constant
/// `c = 2√(2π)`.
pub const HILBERT_SIGN: Sign = Sign::Plus;

/// Linear operator given by a symbol table over one `(L, n)` layout.
#[derive(Clone, Debug)]
pub struct MultiplierOp<T> {
    name: String,
    half_length: T,
    table: Vec<Complex<T>>,
}

impl<T: Real> MultiplierOp<T> {
    /// Tabulates `symbol` at the grid frequencies. The Nyquist entry keeps
    /// only its real part so real fields map to real fields.
    pub fn from_symbol(name: impl Into<String>, grid: &SpectralGrid<T>, symbol: impl Fn(T) -> Complex<T>) -> Self {
        let mut table: Vec<Complex<T>> = grid.frequencies().iter().map(|&xi| symbol(xi)).collect();
        let nyq = grid.nyquist_index();
        table[nyq] = Complex::new(table[nyq].re, T::zero());
        Self {
            name: name.into(),
            half_length: grid.half_length(),
            table,
        }
    }

    pub fn lambda_half(grid: &SpectralGrid<T>) -> Self {
        Self::from_symbol("lambda_half", grid, |xi| Complex::new(xi.abs().sqrt(), T::zero()))
    }

    pub fn hilbert_lambda_half(grid: &SpectralGrid<T>, sign: Sign) -> Self {
        let s = T::lit(sign.value());
        Self::from_symbol("hilbert_lambda_half", grid, move |xi| {
            Complex::new(T::zero(), s * signum0(xi) * xi.abs().sqrt())
        })
    }

    pub fn kernel(grid: &SpectralGrid<T>, kind: KernelKind, sign: Sign) -> Self {
        match kind {
            KernelKind::LambdaHalf => Self::lambda_half(grid),
            KernelKind::HilbertLambdaHalf => Self::hilbert_lambda_half(grid, sign),
        }
    }

    pub fn derivative(grid: &SpectralGrid<T>, order: u32) -> Self {
        let mut op = Self::from_symbol(format!("d{order}"), grid, |xi| {
            Complex::new(T::zero(), xi).powu(order)
        });
        if order % 2 == 1 {
            let nyq = grid.nyquist_index();
            op.table[nyq] = Complex::new(T::zero(), T::zero());
        }
        op
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Symbol values in FFT storage order.
    pub fn table(&self) -> &[Complex<T>] {
        &self.table
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            name: format!("{}*{}", factor, self.name),
            half_length: self.half_length,
            table: self.table.iter().map(|&c| c * factor).collect(),
        }
    }

    /// Operator composition; symbols multiply.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_len(other.len())?;
        Ok(Self {
            name: format!("{}.{}", self.name, other.name),
            half_length: self.half_length,
            table: self.table.iter().zip(&other.table).map(|(&a, &b)| a * b).collect(),
        })
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_len(other.len())?;
        Ok(Self {
            name: format!("{}+{}", self.name, other.name),
            half_length: self.half_length,
            table: self.table.iter().zip(&other.table).map(|(&a, &b)| a + b).collect(),
        })
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.table.len() {
            return Err(Error::SizeMismatch {
                expected: self.table.len(),
                found,
            });
        }
        Ok(())
    }

    /// `inverse(symbol ⊙ transform(field))`.
    pub fn apply(&self, grid: &SpectralGrid<T>, field: &GridField<T>) -> Result<GridField<T>> {
        self.check_len(field.n_points())?;
        self.check_len(grid.n_points())?;
        let mut out = grid.apply_symbol(field, &self.table)?;
        if let Some(t) = field.time_tag() {
            out = out.with_time(t);
        }
        Ok(out)
    }
}

fn signum0<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Linear symbol of the equation family (nonlinear term excluded):
/// `ν(|ξ|^{1/2} + s·i·sgn(ξ)|ξ|^{1/2}) + β(iξ)³`.
pub fn combined_symbol<T: Real>(grid: &SpectralGrid<T>, spec: &EquationSpec, sign: Sign) -> MultiplierOp<T> {
    let nu = T::lit(spec.nu);
    let beta = T::lit(spec.beta);
    let s = T::lit(sign.value());
    MultiplierOp::from_symbol("combined", grid, move |xi| {
        let r = xi.abs().sqrt();
        Complex::new(nu * r, nu * s * signum0(xi) * r + beta * (-xi * xi * xi))
    })
}

/// `Λ^{1/2} + HΛ^{1/2}` with the given dispersive sign, i.e. the combined
/// symbol of the canonical equation.
pub fn nonlocal_pair<T: Real>(grid: &SpectralGrid<T>, sign: Sign) -> MultiplierOp<T> {
    combined_symbol(grid, &EquationSpec::canonical(), sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup() -> SpectralGrid<f64> {
        SpectralGrid::new(PI, 64).unwrap()
    }

    #[test]
    fn lambda_half_on_cos4() {
        let g = setup();
        let f = GridField::from_fn(PI, 64, |x| (4.0 * x).cos()).unwrap();
        let out = MultiplierOp::lambda_half(&g).apply(&g, &f).unwrap();
        for (k, v) in out.values().iter().enumerate() {
            assert!((v - 2.0 * (4.0 * f.node(k)).cos()).abs() < 1e-13);
        }
        let c = GridField::from_fn(PI, 64, |_| 5.0).unwrap();
        assert!(MultiplierOp::lambda_half(&g).apply(&g, &c).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn hilbert_on_cos4_is_minus_two_s_sin() {
        let g = setup();
        let f = GridField::from_fn(PI, 64, |x| (4.0 * x).cos()).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let out = MultiplierOp::hilbert_lambda_half(&g, sign).apply(&g, &f).unwrap();
            for (k, v) in out.values().iter().enumerate() {
                let expect = -2.0 * sign.value() * (4.0 * f.node(k)).sin();
                assert!((v - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn combined_symbol_plug_in() {
        let g = setup();
        let idx = 4; // ξ = 4 on L = π
        let a = combined_symbol(&g, &EquationSpec::canonical(), Sign::Plus);
        assert!((a.table()[idx] - Complex::new(2.0, 2.0)).norm() < 1e-14);
        let kdv = EquationSpec::new(0.0, 1.0 / 6.0, 0.0).unwrap();
        let b = combined_symbol(&g, &kdv, Sign::Plus);
        assert!((b.table()[idx] - Complex::new(0.0, -64.0 / 6.0)).norm() < 1e-12);
        let mixed = EquationSpec::new(1.0, 1.0 / 6.0, 1.0).unwrap();
        let c = combined_symbol(&g, &mixed, Sign::Plus);
        assert!((c.table()[idx] - (a.table()[idx] + b.table()[idx])).norm() < 1e-12);
    }

    #[test]
    fn symbol_tables_are_hermitian() {
        let g = setup();
        let op = combined_symbol(&g, &EquationSpec::new(1.0, 0.3, 1.0).unwrap(), Sign::Minus);
        let n = op.len();
        assert_eq!(op.table()[0], Complex::new(0.0, 0.0));
        for k in 1..n / 2 {
            assert!((op.table()[k] - op.table()[n - k].conj()).norm() < 1e-14);
        }
        assert_eq!(op.table()[n / 2].im, 0.0);
    }

    #[test]
    fn size_mismatch_is_config_error() {
        let g = setup();
        let op = MultiplierOp::lambda_half(&SpectralGrid::new(PI, 32).unwrap());
        let f = GridField::zeros(PI, 64).unwrap();
        assert!(matches!(op.apply(&g, &f), Err(Error::SizeMismatch { .. })));
    }
}
