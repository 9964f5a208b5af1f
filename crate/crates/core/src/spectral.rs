//! Periodic grid functions and their Fourier representation.
//!
//! A field lives on the periodic interval `[-L, L)` sampled at `n` uniform
//! nodes `x_k = -L + k Δx`, `Δx = 2L / n`. Spectra use the convention
//!
//! ```text
//! f(x) = Σ_j c_j exp(i ξ_j x),   ξ_j = π j / L,   j ∈ [-n/2, n/2)
//! ```
//!
//! so `c_0` is the mean of the samples. Coefficients are stored in FFT
//! order: storage index `k` holds mode `j = k` for `k < n/2` and `j = k - n`
//! otherwise; the Nyquist mode is `j = -n/2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible number of grid points.
pub const MIN_POINTS: usize = 16;

/// Relative tolerance for the Hermitian-symmetry check in [`SpectralGrid::inverse`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Real-valued periodic grid function on `[-L, L)`.
#[derive(Clone, PartialEq)]
pub struct GridField<T> {
    half_length: T,
    values: Vec<T>,
    time_tag: Option<T>,
}

impl<T: Real> fmt::Debug for GridField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridField")
            .field("half_length", &self.half_length)
            .field("n_points", &self.values.len())
            .field("time_tag", &self.time_tag)
            .finish()
    }
}

fn validate_layout<T: Real>(half_length: T, n: usize) -> Result<()> {
    if !(half_length > T::zero()) || !half_length.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "half length must be positive and finite, got {half_length}"
        )));
    }
    if n < MIN_POINTS || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "n_points must be a power of two >= {MIN_POINTS}, got {n}"
        )));
    }
    Ok(())
}

impl<T: Real> GridField<T> {
    pub fn new(half_length: T, values: Vec<T>) -> Result<Self> {
        validate_layout(half_length, values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            half_length,
            values,
            time_tag: None,
        })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(half_length: T, n_points: usize, f: impl Fn(T) -> T) -> Result<Self> {
        validate_layout(half_length, n_points)?;
        let dx = T::lit(2.0) * half_length / T::from_usize(n_points).unwrap();
        let values = (0..n_points)
            .map(|k| f(-half_length + T::from_usize(k).unwrap() * dx))
            .collect();
        Self::new(half_length, values)
    }

    pub fn zeros(half_length: T, n_points: usize) -> Result<Self> {
        Self::new(half_length, vec![T::zero(); n_points])
    }

    pub fn with_time(mut self, t: T) -> Self {
        self.time_tag = Some(t);
        self
    }

    pub fn time_tag(&self) -> Option<T> {
        self.time_tag
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn period(&self) -> T {
        T::lit(2.0) * self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dx(&self) -> T {
        self.period() / T::from_usize(self.values.len()).unwrap()
    }

    pub fn node(&self, k: usize) -> T {
        -self.half_length + T::from_usize(k).unwrap() * self.dx()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_points()).map(|k| self.node(k)).collect()
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Average over one period; the conserved mass of the evolution.
    pub fn mean(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |acc, &v| acc + v);
        sum / T::from_usize(self.n_points()).unwrap()
    }

    /// `L²` norm over one period (trapezoidal rule, exact for band-limited data).
    pub fn l2_norm(&self) -> T {
        let sq = self.values.iter().fold(T::zero(), |acc, &v| acc + v * v);
        (sq * self.dx()).sqrt()
    }

    /// Discrete inner product `Σ f_k g_k Δx`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if other.n_points() != self.n_points() {
            return Err(Error::SizeMismatch {
                expected: self.n_points(),
                found: other.n_points(),
            });
        }
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        Ok(s * self.dx())
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let mut out = Self::new(self.half_length, self.values.iter().map(|&v| f(v)).collect())?;
        out.time_tag = self.time_tag;
        Ok(out)
    }

    /// Pointwise linear combination `a·self + b·other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if other.n_points() != self.n_points() {
            return Err(Error::SizeMismatch {
                expected: self.n_points(),
                found: other.n_points(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Self::new(self.half_length, values)
    }

    /// Reduces `x` into the fundamental period `[-L, L)`.
    pub fn wrap(&self, x: T) -> T {
        wrap_periodic(x, self.half_length)
    }
}

/// Reduces `x` into `[-L, L)`.
pub fn wrap_periodic<T: Real>(x: T, half_length: T) -> T {
    let period = T::lit(2.0) * half_length;
    let mut y = (x + half_length) % period;
    if y < T::zero() {
        y = y + period;
    }
    let r = y - half_length;
    if r >= half_length {
        r - period
    } else {
        r
    }
}

/// Fourier coefficients of a periodic field in FFT storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    half_length: T,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(half_length: T, coefficients: Vec<Complex<T>>) -> Result<Self> {
        validate_layout(half_length, coefficients.len())?;
        Ok(Self {
            half_length,
            coefficients,
        })
    }

    pub fn zeros(half_length: T, n: usize) -> Result<Self> {
        Self::new(half_length, vec![Complex::zero(); n])
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coefficients
    }

    /// Signed mode number held at storage index `k`.
    pub fn mode_of_index(&self, k: usize) -> i64 {
        mode_of_index(k, self.len())
    }

    pub fn index_of_mode(&self, j: i64) -> usize {
        let n = self.len() as i64;
        assert!(
            (-n / 2..n / 2).contains(&j),
            "mode {j} outside [-{}, {})",
            n / 2,
            n / 2
        );
        j.rem_euclid(n) as usize
    }

    pub fn coeff(&self, j: i64) -> Complex<T> {
        self.coefficients[self.index_of_mode(j)]
    }

    pub fn set_coeff(&mut self, j: i64, value: Complex<T>) {
        let k = self.index_of_mode(j);
        self.coefficients[k] = value;
    }

    /// Angular frequency `ξ_j = π j / L`.
    pub fn frequency(&self, j: i64) -> T {
        T::PI() * T::from_i64(j).unwrap() / self.half_length
    }

    /// Largest relative deviation from `c(-j) = conj(c(j))`, including the
    /// imaginary parts of the mean and Nyquist modes.
    pub fn hermitian_residual(&self) -> T {
        let n = self.len();
        let scale = self
            .coefficients
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.norm()));
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = self.coefficients[0].im.abs().max(self.coefficients[n / 2].im.abs());
        for k in 1..n / 2 {
            let d = (self.coefficients[k] - self.coefficients[n - k].conj()).norm();
            worst = worst.max(d);
        }
        worst / scale
    }

    /// Two-thirds rule: zeroes every mode with `|j| > n/3`.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        let n = self.len();
        for (k, c) in out.coefficients.iter_mut().enumerate() {
            if 3 * mode_of_index(k, n).unsigned_abs() as usize > n {
                *c = Complex::zero();
            }
        }
        out
    }

    /// Fraction of the (optionally derivative-weighted) spectral energy held by
    /// modes with `|j| > cutoff`. The weight is `ξ^(2·weight_order)`.
    pub fn tail_energy_fraction(&self, cutoff: usize, weight_order: u32) -> T {
        let n = self.len();
        let mut total = T::zero();
        let mut tail = T::zero();
        for (k, c) in self.coefficients.iter().enumerate() {
            let j = mode_of_index(k, n);
            let xi = self.frequency(j);
            let w = xi.powi(2 * weight_order as i32);
            let e = w * c.norm_sqr();
            total = total + e;
            if j.unsigned_abs() as usize > cutoff {
                tail = tail + e;
            }
        }
        if total > T::zero() {
            tail / total
        } else {
            T::zero()
        }
    }
}

/// Two-thirds dealiasing of a spectrum.
pub fn dealias<T: Real>(spectrum: &Spectrum<T>) -> Spectrum<T> {
    spectrum.dealias()
}

pub(crate) fn mode_of_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT plans and wavenumber tables for one `(L, n)` layout.
///
/// Plans are shared behind `Arc` and are safe to use from several threads.
#[derive(Clone)]
pub struct SpectralGrid<T: Real> {
    half_length: T,
    n: usize,
    forward: Arc<dyn Fft<T>>,
    backward: Arc<dyn Fft<T>>,
    frequencies: Vec<T>,
}

impl<T: Real> fmt::Debug for SpectralGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .finish()
    }
}

impl<T: Real> SpectralGrid<T> {
    pub fn new(half_length: T, n: usize) -> Result<Self> {
        validate_layout(half_length, n)?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);
        let frequencies = (0..n)
            .map(|k| T::PI() * T::from_i64(mode_of_index(k, n)).unwrap() / half_length)
            .collect();
        Ok(Self {
            half_length,
            n,
            forward,
            backward,
            frequencies,
        })
    }

    pub fn for_field(field: &GridField<T>) -> Result<Self> {
        Self::new(field.half_length(), field.n_points())
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> T {
        T::lit(2.0) * self.half_length / T::from_usize(self.n).unwrap()
    }

    pub fn nodes(&self) -> Vec<T> {
        let dx = self.dx();
        (0..self.n)
            .map(|k| -self.half_length + T::from_usize(k).unwrap() * dx)
            .collect()
    }

    /// Angular frequencies `ξ` in FFT storage order.
    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    /// Storage index of the Nyquist mode.
    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub(crate) fn check_field(&self, field: &GridField<T>) -> Result<()> {
        if field.n_points() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: field.n_points(),
            });
        }
        if field.half_length() != self.half_length {
            return Err(Error::InvalidGrid(format!(
                "field half length {} does not match grid half length {}",
                field.half_length(),
                self.half_length
            )));
        }
        Ok(())
    }

    /// Forward transform of raw samples into convention coefficients.
    pub(crate) fn forward_values(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        let inv_n = T::one() / T::from_usize(self.n).unwrap();
        // x_0 = -L contributes the phase (-1)^j.
        for (k, c) in buf.iter_mut().enumerate() {
            let s = if k % 2 == 0 { inv_n } else { -inv_n };
            *c = *c * s;
        }
        buf
    }

    /// Inverse transform keeping the real part without a symmetry check.
    pub(crate) fn inverse_values(&self, coefficients: &[Complex<T>]) -> Vec<T> {
        let mut buf: Vec<Complex<T>> = coefficients
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
            .collect();
        self.backward.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn transform(&self, field: &GridField<T>) -> Result<Spectrum<T>> {
        self.check_field(field)?;
        Spectrum::new(self.half_length, self.forward_values(field.values()))
    }

    /// Inverse transform; rejects spectra that do not represent a real field.
    pub fn inverse(&self, spectrum: &Spectrum<T>) -> Result<GridField<T>> {
        if spectrum.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: spectrum.len(),
            });
        }
        let residual = spectrum.hermitian_residual();
        if residual > T::lit(HERMITIAN_TOL) || residual.is_nan() {
            return Err(Error::CorruptedSpectrum {
                residual: residual.to_f64_lossy(),
            });
        }
        GridField::new(self.half_length, self.inverse_values(spectrum.coefficients()))
    }

    /// Multiplies every coefficient by `symbol(ξ)` (given in storage order)
    /// and returns the real field.
    pub(crate) fn apply_symbol(&self, field: &GridField<T>, symbol: &[Complex<T>]) -> Result<GridField<T>> {
        self.check_field(field)?;
        if symbol.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: symbol.len(),
            });
        }
        let mut c = self.forward_values(field.values());
        for (ck, &sk) in c.iter_mut().zip(symbol) {
            *ck = *ck * sk;
        }
        GridField::new(self.half_length, self.inverse_values(&c))
    }

    /// Symbol table of `∂ₓ^order`: `(iξ)^order`, Nyquist zeroed for odd orders.
    pub fn derivative_symbol(&self, order: u32) -> Vec<Complex<T>> {
        let i = Complex::new(T::zero(), T::one());
        let mut sym: Vec<Complex<T>> = self
            .frequencies
            .iter()
            .map(|&xi| (i * xi).powu(order))
            .collect();
        if order % 2 == 1 {
            sym[self.nyquist_index()] = Complex::zero();
        }
        sym
    }

    pub fn derivative(&self, field: &GridField<T>, order: u32) -> Result<GridField<T>> {
        if order == 0 {
            return Err(Error::InvalidArgument("derivative order must be >= 1".into()));
        }
        let mut out = self.apply_symbol(field, &self.derivative_symbol(order))?;
        out.time_tag = field.time_tag;
        Ok(out)
    }

    /// Spectral interpolant of `field`, reusable across many evaluation points.
    pub fn interpolant(&self, field: &GridField<T>) -> Result<Interpolant<T>> {
        self.check_field(field)?;
        Ok(Interpolant::from_coefficients(
            self.half_length,
            self.forward_values(field.values()),
        ))
    }

    /// Interpolant of `∂ₓ^order field`, built without an intermediate grid pass.
    pub fn derivative_interpolant(&self, field: &GridField<T>, order: u32) -> Result<Interpolant<T>> {
        self.check_field(field)?;
        let sym = self.derivative_symbol(order);
        let c = self
            .forward_values(field.values())
            .into_iter()
            .zip(sym)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Interpolant::from_coefficients(self.half_length, c))
    }

    /// Trigonometric interpolation of `field` at arbitrary positions.
    pub fn interpolate(&self, field: &GridField<T>, positions: &[T]) -> Result<Vec<T>> {
        let interp = self.interpolant(field)?;
        positions
            .iter()
            .enumerate()
            .map(|(index, &x)| {
                if x.is_finite() {
                    Ok(interp.eval(x))
                } else {
                    Err(Error::NonFinite { index })
                }
            })
            .collect()
    }

    /// `( Σ_{k≤s} ‖∂ₓᵏ f‖²_{L²} )^{1/2}` over one period, via Parseval.
    pub fn sobolev_norm(&self, field: &GridField<T>, s: u32) -> Result<T> {
        if s > 3 {
            return Err(Error::InvalidArgument(format!(
                "Sobolev order must be in 0..=3, got {s}"
            )));
        }
        self.check_field(field)?;
        let c = self.forward_values(field.values());
        let nyq = self.nyquist_index();
        let mut total = T::zero();
        for (k, ck) in c.iter().enumerate() {
            let xi2 = self.frequencies[k] * self.frequencies[k];
            let mut weight = T::zero();
            let mut p = T::one();
            for order in 0..=s {
                // odd derivatives drop the Nyquist mode, as `derivative` does
                if !(k == nyq && order % 2 == 1) {
                    weight = weight + p;
                }
                p = p * xi2;
            }
            total = total + weight * ck.norm_sqr();
        }
        Ok((total * T::lit(2.0) * self.half_length).sqrt())
    }
}

/// Evaluates `Σ_j c_j exp(i ξ_j x)` for a real field at arbitrary `x`.
#[derive(Clone, Debug)]
pub struct Interpolant<T> {
    half_length: T,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> Interpolant<T> {
    pub(crate) fn from_coefficients(half_length: T, coefficients: Vec<Complex<T>>) -> Self {
        Self {
            half_length,
            coefficients,
        }
    }

    pub fn from_spectrum(spectrum: &Spectrum<T>) -> Self {
        Self::from_coefficients(spectrum.half_length(), spectrum.coefficients().to_vec())
    }

    pub fn eval(&self, x: T) -> T {
        const RESEED: usize = 32;
        let n = self.coefficients.len();
        let theta = T::PI() * x / self.half_length;
        let step = Complex::from_polar(T::one(), theta);
        let mut acc = Complex::zero();
        let mut phase = step;
        for j in 1..n / 2 {
            if j % RESEED == 0 {
                phase = Complex::from_polar(T::one(), theta * T::from_usize(j).unwrap());
            }
            acc = acc + self.coefficients[j] * phase;
            phase = phase * step;
        }
        let two = T::lit(2.0);
        let nyquist = self.coefficients[n / 2].re * (theta * T::from_usize(n / 2).unwrap()).cos();
        self.coefficients[0].re + two * acc.re + nyquist
    }

    pub fn eval_many(&self, xs: &[T]) -> Vec<T> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}
