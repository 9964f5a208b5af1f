//! Direct evaluation of the two singular integrals on the real line.
//!
//! ```text
//! Λ^{1/2} f(x)  = p.v. ∫ (f(x) - f(y)) / |x - y|^{3/2} dy
//! HΛ^{1/2} f(x) = p.v. ∫ (f(x) - f(y)) sgn(x - y) / |x - y|^{3/2} dy
//! ```
//!
//! These are the slow reference for the Fourier multipliers. Values are
//! raw, i.e. not rescaled by the calibration constant.

use crate::error::{Error, Result};
use crate::nonlocal::KernelKind;

/// Smallest tolerance accepted by [`pv_quadrature`].
pub const MIN_TOL: f64 = 1e-10;

const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureEstimate {
    fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

/// One 15-point Kronrod rule with embedded 7-point Gauss error estimate.
fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_k = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        *slot = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let (value, asc) = (kronrod * half, asc * half.abs());
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_k * half.abs();
    (value, err.max(floor))
}

/// Globally adaptive bisection until the summed error is below `abs_tol`.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> QuadratureEstimate {
    if a == b {
        return QuadratureEstimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (v, e) = gauss_kronrod(f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if total_err <= abs_tol || intervals.len() >= MAX_INTERVALS {
            let value = intervals.iter().map(|iv| iv.2).sum();
            return QuadratureEstimate {
                value,
                error: total_err,
                evaluations,
                converged: total_err <= abs_tol,
            };
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in floating point
            let value = intervals.iter().map(|iv| iv.2).sum::<f64>();
            return QuadratureEstimate {
                value,
                error: total_err,
                evaluations,
                converged: false,
            };
        }
        let (v1, e1) = gauss_kronrod(f, lo, mid);
        let (v2, e2) = gauss_kronrod(f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= MIN_TOL) {
        return Err(Error::InvalidArgument(format!(
            "quadrature tolerance must be >= {MIN_TOL:e}, got {tol:e}"
        )));
    }
    Ok(())
}

/// Principal-value integral of `kind` applied to `profile` at `x`.
///
/// The kernel is folded over `h ↔ -h`, which cancels the odd singular part.
/// Near the singularity (`|h| < δ₀ = min(1, R/100)`) the substitution
/// `h = w²` leaves a bounded integrand; beyond it, adaptive Gauss-Kronrod
/// runs out to `R`. Beyond `R` the profile is frozen at `f(x ± R)`, which
/// makes the `f(x)` tail of `Λ^{1/2}` exact; the size of the `f(y)` tails,
/// estimated from samples at `2R, 4R, 8R`, is added to the error estimate.
pub fn pv_quadrature(
    kind: KernelKind,
    profile: &dyn Fn(f64) -> f64,
    x: f64,
    radius: f64,
    tol: f64,
) -> Result<f64> {
    pv_quadrature_estimate(kind, profile, x, radius, tol).map(|e| e.value)
}

/// As [`pv_quadrature`] but returning the full estimate.
pub fn pv_quadrature_estimate(
    kind: KernelKind,
    profile: &dyn Fn(f64) -> f64,
    x: f64,
    radius: f64,
    tol: f64,
) -> Result<QuadratureEstimate> {
    check_tol(tol)?;
    if !(radius > 0.0) || !radius.is_finite() || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need finite x and positive radius, got x = {x}, R = {radius}"
        )));
    }
    let fx = profile(x);
    let delta0 = (radius / 100.0).min(1.0);
    let inner: Box<dyn Fn(f64) -> f64> = match kind {
        KernelKind::LambdaHalf => Box::new(move |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let h = w * w;
            2.0 * (2.0 * fx - profile(x - h) - profile(x + h)) / h
        }),
        KernelKind::HilbertLambdaHalf => Box::new(move |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let h = w * w;
            2.0 * (profile(x + h) - profile(x - h)) / h
        }),
    };
    let outer: Box<dyn Fn(f64) -> f64> = match kind {
        KernelKind::LambdaHalf => {
            Box::new(move |h: f64| (2.0 * fx - profile(x - h) - profile(x + h)) / h.powf(1.5))
        }
        KernelKind::HilbertLambdaHalf => {
            Box::new(move |h: f64| (profile(x + h) - profile(x - h)) / h.powf(1.5))
        }
    };

    let (left, right) = (profile(x - radius), profile(x + radius));
    let drift = [2.0, 4.0, 8.0].iter().fold(0.0_f64, |acc, &k| {
        acc.max((profile(x - k * radius) - left).abs())
            .max((profile(x + k * radius) - right).abs())
    });
    let tail_bound = 4.0 * drift / radius.sqrt();
    // profile frozen at its values at distance R
    let tail_exact = match kind {
        KernelKind::LambdaHalf => 2.0 * (2.0 * fx - left - right) / radius.sqrt(),
        KernelKind::HilbertLambdaHalf => 2.0 * (right - left) / radius.sqrt(),
    };

    // Rough magnitude of the answer sets the absolute target.
    let coarse = integrate_adaptive(&*inner, 0.0, delta0.sqrt(), f64::INFINITY)
        .combine(integrate_adaptive(&*outer, delta0, radius, f64::INFINITY));
    let scale = (coarse.value + tail_exact).abs().max(fx.abs() * 1e-3);
    let target = tol * scale;

    let near = integrate_adaptive(&*inner, 0.0, delta0.sqrt(), 0.25 * target);
    let far = integrate_adaptive(&*outer, delta0, radius, 0.5 * target);
    let mut est = near.combine(far);
    est.value += tail_exact;
    est.error += tail_bound;
    est.converged = est.error <= target;
    if !est.converged {
        return Err(Error::QuadratureFailure {
            estimate: est.value,
            error: est.error,
            tol: target,
        });
    }
    Ok(est)
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0`, by
/// Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1 and a > 0");
    // B_{2k} / (2k)!
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    const N: usize = 12;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (a + k as f64).powf(-s);
    }
    let q = a + N as f64;
    sum += q.powf(1.0 - s) / (s - 1.0) + 0.5 * q.powf(-s);
    // rising product s (s+1) ... (s + 2k - 2) times q^{-s-2k+1}
    let mut fac = s;
    let mut qpow = q.powf(-s - 1.0);
    for (k, b) in B.iter().enumerate() {
        sum += b * fac * qpow;
        let m = 2.0 * k as f64;
        fac *= (s + m + 1.0) * (s + m + 2.0);
        qpow /= q * q;
    }
    sum
}

/// Kernel of all nonzero periodic images, `Σ_{m≠0} K(h + 2Lm)`, for `|h| < 2L`.
pub fn image_kernel(kind: KernelKind, h: f64, half_length: f64) -> f64 {
    let p = 2.0 * half_length;
    let a = h / p;
    let plus = hurwitz_zeta(1.5, 1.0 + a);
    let minus = hurwitz_zeta(1.5, 1.0 - a);
    let scale = p.powf(-1.5);
    match kind {
        KernelKind::LambdaHalf => scale * (plus + minus),
        KernelKind::HilbertLambdaHalf => scale * (plus - minus),
    }
}

/// Difference between the periodic operator and the line operator for a
/// profile that vanishes outside `[-L, L]`:
/// `-∫_{-L}^{L} f(y) Σ_{m≠0} K(x - y + 2Lm) dy`, for `|x| < L`.
pub fn periodic_image_correction(
    kind: KernelKind,
    profile: &dyn Fn(f64) -> f64,
    x: f64,
    half_length: f64,
    abs_tol: f64,
) -> Result<QuadratureEstimate> {
    if !(x.abs() < half_length) {
        return Err(Error::Domain(format!(
            "image correction needs |x| < L, got x = {x}, L = {half_length}"
        )));
    }
    let integrand = |y: f64| -profile(y) * image_kernel(kind, x - y, half_length);
    // split at the profile's likely centre so narrow bumps are not missed
    let mut est = integrate_adaptive(&integrand, -half_length, 0.0, 0.5 * abs_tol)
        .combine(integrate_adaptive(&integrand, 0.0, half_length, 0.5 * abs_tol));
    est.converged = est.error <= abs_tol;
    if !est.converged {
        return Err(Error::QuadratureFailure {
            estimate: est.value,
            error: est.error,
            tol: abs_tol,
        });
    }
    Ok(est)
}
