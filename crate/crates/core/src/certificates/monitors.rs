//! Pointwise inequalities checked along a trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EquationSpec;
use crate::nonlocal::{combined_symbol, nonlocal_pair, MultiplierOp, HILBERT_SIGN};
use crate::scalar::Real;
use crate::spectral::{GridField, SpectralGrid};

/// Constant relating both singular integrals to their canonical symbols,
/// `2√(2π)`; [`crate::nonlocal::calibrate`] reproduces it.
pub const KERNEL_CONSTANT: f64 = 5.013_256_549_262_001;

/// Constant of the two-scale bound.
pub const SPLIT_CONSTANT: f64 = 28.0;

/// Weighted slope-spectrum tail above which a derivative counts as unresolved.
pub const RESOLUTION_TAIL: f64 = 1e-8;

/// `true` when `∂ₓ^order u` is resolved: the outer third of the retained
/// band holds less than [`RESOLUTION_TAIL`] of its spectral energy.
pub fn derivative_resolved<T: Real>(grid: &SpectralGrid<T>, u: &GridField<T>, order: u32) -> Result<bool> {
    let spec = grid.transform(u)?;
    let band = grid.n_points() / 3;
    let tail = spec.tail_energy_fraction(2 * band / 3, order).to_f64_lossy();
    Ok(tail < RESOLUTION_TAIL)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub n: u32,
    pub delta: f64,
    /// `‖(Λ^{1/2} + HΛ^{1/2}) ∂ₓⁿu‖_∞` with canonical symbols.
    pub lhs: f64,
    /// The same in the singular-integral normalization (`KERNEL_CONSTANT · lhs`).
    pub lhs_integral: f64,
    pub vn_sup: f64,
    pub vn1_sup: f64,
    /// `28 (δ^{-1/2} ‖vₙ‖ + δ^{1/2} ‖vₙ₊₁‖)`.
    pub rhs: f64,
    pub holds: bool,
    pub resolved: bool,
}

impl BoundSample {
    /// Smallest constant `C` with `lhs_integral ≤ C (δ^{-1/2}‖vₙ‖ + δ^{1/2}‖vₙ₊₁‖)`.
    pub fn required_constant(&self) -> f64 {
        let scale = self.rhs / SPLIT_CONSTANT;
        if scale > 0.0 {
            self.lhs_integral / scale
        } else {
            0.0
        }
    }
}

/// `δ` minimizing the right side, `‖vₙ‖ / ‖vₙ₊₁‖`.
pub fn balanced_delta(vn_sup: f64, vn1_sup: f64) -> Option<f64> {
    (vn_sup > 0.0 && vn1_sup > 0.0).then(|| vn_sup / vn1_sup)
}

/// Precomputed operators for repeated bound checks on one grid.
pub struct BoundChecker<T: Real> {
    grid: SpectralGrid<T>,
    pair: MultiplierOp<T>,
}

impl<T: Real> BoundChecker<T> {
    pub fn new(grid: SpectralGrid<T>) -> Self {
        let pair = nonlocal_pair(&grid, HILBERT_SIGN);
        Self { grid, pair }
    }

    /// Sup norms `‖∂ₓⁿu‖`, `‖∂ₓⁿ⁺¹u‖`, `‖(Λ^{1/2}+HΛ^{1/2})∂ₓⁿu‖` and resolution.
    pub fn norms(&self, u: &GridField<T>, n: u32) -> Result<(f64, f64, f64, bool)> {
        if n > 3 {
            return Err(Error::InvalidArgument(format!("derivative order must be <= 3, got {n}")));
        }
        let vn = if n == 0 { u.clone() } else { self.grid.derivative(u, n)? };
        let vn1 = self.grid.derivative(u, n + 1)?;
        let op = self.pair.apply(&self.grid, &vn)?;
        let resolved = derivative_resolved(&self.grid, u, n + 1)?;
        Ok((
            vn.sup_norm().to_f64_lossy(),
            vn1.sup_norm().to_f64_lossy(),
            op.sup_norm().to_f64_lossy(),
            resolved,
        ))
    }

    pub fn check(&self, u: &GridField<T>, n: u32, delta: f64) -> Result<BoundSample> {
        let (vn_sup, vn1_sup, lhs, resolved) = self.norms(u, n)?;
        Ok(bound_sample(n, delta, lhs, vn_sup, vn1_sup, resolved))
    }
}

pub fn bound_sample(n: u32, delta: f64, lhs: f64, vn_sup: f64, vn1_sup: f64, resolved: bool) -> BoundSample {
    let rhs = SPLIT_CONSTANT * (vn_sup / delta.sqrt() + delta.sqrt() * vn1_sup);
    let lhs_integral = KERNEL_CONSTANT * lhs;
    BoundSample {
        n,
        delta,
        lhs,
        lhs_integral,
        vn_sup,
        vn1_sup,
        rhs,
        holds: lhs_integral <= rhs,
        resolved,
    }
}

/// Two-scale bound `|Kₙ + φₙ| ≤ 28(δ^{-1/2}‖vₙ‖_∞ + δ^{1/2}‖vₙ₊₁‖_∞)`.
pub fn kphi_bound_check<T: Real>(u: &GridField<T>, n: u32, delta: f64) -> Result<BoundSample> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    BoundChecker::new(SpectralGrid::for_field(u)?).check(u, n, delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G5Sample {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖ν(Λ^{1/2} + HΛ^{1/2}) ∂ₓu‖_∞ ≤ ε² m²`, given `ν(Λ^{1/2}+HΛ^{1/2})∂ₓu`'s sup norm.
pub fn g5_from_norm(forcing_sup: f64, m: f64, epsilon: f64) -> Result<G5Sample> {
    if !(m < 0.0) {
        return Err(Error::Domain(format!("g5 monitor needs m < 0, got {m}")));
    }
    let rhs = epsilon * epsilon * m * m;
    Ok(G5Sample {
        lhs: forcing_sup,
        rhs,
        holds: forcing_sup <= rhs,
    })
}

/// Premise `|K₁ + φ₁| ≤ ε² m²` of the breaking argument, for the canonical
/// equation.
pub fn g5_monitor<T: Real>(u: &GridField<T>, m: f64, epsilon: f64) -> Result<G5Sample> {
    let grid = SpectralGrid::for_field(u)?;
    let ux = grid.derivative(u, 1)?;
    let f = nonlocal_pair(&grid, HILBERT_SIGN).apply(&grid, &ux)?;
    g5_from_norm(f.sup_norm().to_f64_lossy(), m, epsilon)
}

/// Linear forcing `σ(D) ∂ₓu` in the slope equation
/// `dv₁/dt + α v₁² + σ(D)∂ₓu = 0` along characteristics.
pub fn slope_forcing<T: Real>(grid: &SpectralGrid<T>, u: &GridField<T>, spec: &EquationSpec) -> Result<GridField<T>> {
    let ux = grid.derivative(u, 1)?;
    combined_symbol(grid, spec, HILBERT_SIGN).apply(grid, &ux)
}

/// `|dm/dt + α m² + forcing| / m²`.
pub fn riccati_residual(dm_dt: f64, m: f64, forcing: f64, alpha: f64) -> f64 {
    (dm_dt + alpha * m * m + forcing).abs() / (m * m)
}

/// Three-point derivative on a nonuniform mesh; `None` at the ends.
pub fn central_differences(t: &[f64], y: &[f64]) -> Vec<Option<f64>> {
    let n = t.len().min(y.len());
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 >= n {
                return None;
            }
            let h1 = t[i] - t[i - 1];
            let h2 = t[i + 1] - t[i];
            if !(h1 > 0.0 && h2 > 0.0) {
                return None;
            }
            Some(
                -h2 / (h1 * (h1 + h2)) * y[i - 1] + (h2 - h1) / (h1 * h2) * y[i]
                    + h1 / (h2 * (h1 + h2)) * y[i + 1],
            )
        })
        .collect()
}

/// Residuals of the slope equation at the minimizing point for a sampled
/// history of `(t, m, forcing at argmin)`.
pub fn riccati_residuals(t: &[f64], m: &[f64], forcing: &[f64], alpha: f64) -> Vec<Option<f64>> {
    central_differences(t, m)
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.map(|d| riccati_residual(d, m[i], forcing[i], alpha)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kernel_constant_closed_form() {
        assert!((KERNEL_CONSTANT - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bound_on_zero_and_single_mode() {
        let z = GridField::zeros(PI, 64).unwrap();
        let s = kphi_bound_check(&z, 0, 1.0).unwrap();
        assert_eq!((s.lhs, s.rhs), (0.0, 0.0));
        assert!(s.holds);

        let u = GridField::from_fn(PI, 64, |x| (4.0 * x).cos()).unwrap();
        let s = kphi_bound_check(&u, 0, 1.0).unwrap();
        assert!((s.lhs - 2.0 * 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((s.rhs - 140.0).abs() < 1e-11);
        assert!(s.holds && s.resolved);
        assert!(kphi_bound_check(&u, 4, 1.0).is_err());
        assert!(kphi_bound_check(&u, 0, 0.0).is_err());
    }

    #[test]
    fn g5_examples() {
        let u = GridField::from_fn(PI, 64, |x| 1e-6 * x.sin()).unwrap();
        assert!(g5_monitor(&u, -1e4, 0.1).unwrap().holds);
        let c = GridField::from_fn(PI, 64, f64::cos).unwrap();
        let s = g5_monitor(&c, -1.0, 0.01).unwrap();
        assert!((s.lhs - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!(!s.holds);
        let z = GridField::zeros(PI, 64).unwrap();
        assert!(g5_monitor(&z, -1.0, 0.1).unwrap().holds);
        assert!(g5_monitor(&z, 0.0, 0.1).is_err());
    }

    #[test]
    fn riccati_residual_of_exact_solution_is_second_order() {
        let m0 = -10.0;
        let exact = |t: f64| m0 / (1.0 + m0 * t);
        let worst = |dt: f64| {
            let n = (0.049 / dt).round() as usize + 1;
            let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
            let m: Vec<f64> = t.iter().map(|&t| exact(t)).collect();
            let f = vec![0.0; t.len()];
            riccati_residuals(&t, &m, &f, 1.0)
                .into_iter()
                .flatten()
                .fold(0.0, f64::max)
        };
        let (a, b) = (worst(1e-3), worst(5e-4));
        assert!(a < 1e-3);
        assert!((a / b - 4.0).abs() < 0.5, "ratio {}", a / b);
    }

    #[test]
    fn central_difference_is_exact_on_quadratics() {
        let t = [0.0, 0.1, 0.35, 0.4];
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let d = central_differences(&t, &y);
        assert!(d[0].is_none() && d[3].is_none());
        for i in 1..3 {
            assert!((d[i].unwrap() - (6.0 * t[i] - 1.0)).abs() < 1e-12);
        }
    }
}
