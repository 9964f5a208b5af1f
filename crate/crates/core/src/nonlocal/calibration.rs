//! Fits the constant and sign relating the singular integrals to the
//! canonical multipliers.

use serde::{Deserialize, Serialize};

use super::quadrature::{periodic_image_correction, pv_quadrature_estimate};
use super::{KernelKind, MultiplierOp, Sign};
use crate::error::{Error, Result};
use crate::spectral::{GridField, SpectralGrid};

/// Largest accepted relative mismatch between oracle and multiplier.
pub const RESIDUAL_LIMIT: f64 = 1e-6;

/// Relative tolerance of each oracle evaluation.
pub const ORACLE_TOL: f64 = 1e-10;

/// Raw singular integral = `c · s · (canonical multiplier)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kernel: KernelKind,
    pub c: f64,
    pub s: Sign,
    pub residual: f64,
}

/// Sample points `-2, -1.5, ..., 2`.
pub fn sample_points() -> [f64; 9] {
    std::array::from_fn(|i| -2.0 + 0.5 * i as f64)
}

pub fn unit_gaussian(x: f64) -> f64 {
    (-x * x).exp()
}

/// The line integral of `profile`, corrected for the periodic images of the
/// grid cell when the profile is negligible at the cell boundary and `x`
/// lies inside it. This is the value the periodic multiplier should return.
pub fn periodic_oracle(kind: KernelKind, profile: &dyn Fn(f64) -> f64, x: f64, half_length: f64) -> Result<f64> {
    let radius = (1.5 * half_length).max(30.0);
    let line = pv_quadrature_estimate(kind, profile, x, radius, ORACLE_TOL)?;
    let edge = profile(half_length).abs().max(profile(-half_length).abs());
    let peak = profile(x).abs().max(profile(0.0).abs());
    if x.abs() < half_length && edge <= 1e-10 * peak.max(f64::MIN_POSITIVE) {
        let tol = ORACLE_TOL * line.value.abs().max(peak);
        let images = periodic_image_correction(kind, profile, x, half_length, tol)?;
        Ok(line.value + images.value)
    } else {
        Ok(line.value)
    }
}

/// Oracle values and the multiplier output (canonical symbol) at `points`.
pub fn oracle_and_multiplier(
    kind: KernelKind,
    grid: &SpectralGrid<f64>,
    profile: &dyn Fn(f64) -> f64,
    points: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let field = GridField::from_fn(grid.half_length(), grid.n_points(), profile)?;
    let op = MultiplierOp::kernel(grid, kind, Sign::Plus);
    let applied = op.apply(grid, &field)?;
    let multiplier = grid.interpolate(&applied, points)?;
    let oracle = points
        .iter()
        .map(|&x| periodic_oracle(kind, profile, x, grid.half_length()))
        .collect::<Result<Vec<_>>>()?;
    Ok((oracle, multiplier))
}

/// `max |o - c·s·m| / max |o|`.
pub fn relative_mismatch(oracle: &[f64], multiplier: &[f64], c: f64, s: Sign) -> f64 {
    let scale = oracle.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let worst = oracle
        .iter()
        .zip(multiplier)
        .fold(0.0_f64, |a, (o, m)| a.max((o - c * s.value() * m).abs()));
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Mismatch of an existing calibration against the oracle for `profile`.
pub fn verify(
    calibration: &Calibration,
    grid: &SpectralGrid<f64>,
    profile: &dyn Fn(f64) -> f64,
    points: &[f64],
) -> Result<f64> {
    let (o, m) = oracle_and_multiplier(calibration.kernel, grid, profile, points)?;
    Ok(relative_mismatch(&o, &m, calibration.c, calibration.s))
}

/// Least-squares constant and sign on a unit Gaussian at nine points.
pub fn calibrate(kind: KernelKind, half_length: f64, n_points: usize) -> Result<Calibration> {
    let grid = SpectralGrid::new(half_length, n_points)?;
    let points = sample_points();
    let (o, m) = oracle_and_multiplier(kind, &grid, &unit_gaussian, &points)?;
    let om: f64 = o.iter().zip(&m).map(|(a, b)| a * b).sum();
    let mm: f64 = m.iter().map(|b| b * b).sum();
    let s = match kind {
        KernelKind::LambdaHalf => Sign::Plus,
        KernelKind::HilbertLambdaHalf => Sign::of(om),
    };
    let c = if mm > 0.0 { om.abs() / mm } else { 0.0 };
    let c = if kind == KernelKind::LambdaHalf { om / mm } else { c };
    let residual = relative_mismatch(&o, &m, c, s);
    if !(residual <= RESIDUAL_LIMIT) || !(c > 0.0) {
        return Err(Error::CalibrationFailure {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(Calibration {
        kernel: kind,
        c,
        s,
        residual,
    })
}
