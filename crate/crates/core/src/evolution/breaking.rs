//! Breaking-time estimation from a slope history.

use serde::{Deserialize, Serialize};

use super::integrate::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum number of samples with `m < 0`.
pub const MIN_SAMPLES: usize = 10;
/// The fit window starts once `m ≤ FIT_FACTOR · m(0)`.
pub const FIT_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakingVerdict {
    Breaking,
    NoBreaking,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakingReport {
    pub verdict: BreakingVerdict,
    /// Zero crossing of the linear fit of `-1/m` against `t`.
    pub t_est: Option<f64>,
    /// RMS residual of the fit, relative to the largest `-1/m` in the window.
    pub fit_residual: Option<f64>,
    pub fit_points: usize,
    /// Last reliable time.
    pub t_star: f64,
    pub m_at_t_star: f64,
    /// `t* - 1/m(t*)`.
    pub fallback: f64,
    pub used_fallback: bool,
    pub m0: f64,
}

/// Estimates the breaking time from a trajectory, fitting only samples up
/// to its last reliable time.
pub fn detect_breaking<T: Real>(traj: &Trajectory<T>) -> Result<BreakingReport> {
    let t: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let m: Vec<f64> = traj.samples.iter().map(|s| s.m).collect();
    detect_breaking_samples(&t, &m, traj.last_reliable_time)
}

/// Estimates the breaking time from samples `(tᵢ, m(tᵢ))`.
///
/// `-1/m` is fitted by a line over the samples with `m ≤ 5 m(0)` and
/// `t ≤ t*`. With fewer than three such samples the estimate falls back to
/// `t* - 1/m(t*)`. If `m` never reaches `5 m(0)` the verdict is no breaking.
pub fn detect_breaking_samples(t: &[f64], m: &[f64], t_star: f64) -> Result<BreakingReport> {
    if t.len() != m.len() {
        return Err(Error::SizeMismatch {
            expected: t.len(),
            found: m.len(),
        });
    }
    if t.iter().chain(m).any(|v| !v.is_finite()) || !t_star.is_finite() {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    let negative = m.iter().filter(|&&v| v < 0.0).count();
    if negative < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples with negative slope, found {negative}"
        )));
    }
    let m0 = m[0];
    if !(m0 < 0.0) {
        return Err(Error::InvalidArgument("initial slope minimum must be negative".into()));
    }
    let star = t.iter().rposition(|&ti| ti <= t_star).unwrap_or(0);
    let (ts, ms) = (t[star], m[star]);
    let fallback = ts - 1.0 / ms;
    let threshold = FIT_FACTOR * m0;

    let mut report = BreakingReport {
        verdict: BreakingVerdict::NoBreaking,
        t_est: None,
        fit_residual: None,
        fit_points: 0,
        t_star: ts,
        m_at_t_star: ms,
        fallback,
        used_fallback: false,
        m0,
    };
    if !m.iter().any(|&v| v <= threshold) {
        return Ok(report);
    }
    report.verdict = BreakingVerdict::Breaking;

    let window: Vec<(f64, f64)> = t[..=star]
        .iter()
        .zip(&m[..=star])
        .filter(|(_, &mi)| mi <= threshold)
        .map(|(&ti, &mi)| (ti, -1.0 / mi))
        .collect();
    report.fit_points = window.len();
    match fit_line(&window) {
        Some((a, b, rms)) if b < 0.0 => {
            report.t_est = Some(-a / b);
            let scale = window.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
            report.fit_residual = Some(rms / scale);
        }
        _ => {
            report.t_est = Some(fallback);
            report.used_fallback = true;
        }
    }
    Ok(report)
}

/// Least squares `y = a + b t`, returning `(a, b, rms)`.
fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt == 0.0 {
        return None;
    }
    let sty: f64 = points.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let b = sty / stt;
    let a = ym - b * tm;
    let rms = (points.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some((a, b, rms))
}
