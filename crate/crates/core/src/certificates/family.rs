//! Initial data `u₀(x) = A f(x/λ)` whose norms follow from those of a fixed
//! analytic profile `f`, so the hypotheses can be checked at amplitudes no
//! grid could represent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|H_k(x)| e^{-x²/2} ≤ CRAMER · √(2^k k!)`.
pub const CRAMER: f64 = 1.086_435;

/// Highest derivative order with a tabulated sup norm.
pub const MAX_TABULATED: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseProfile {
    /// `f(x) = e^{-x²}`.
    Gaussian,
    /// `f(x) = -x e^{-x²}`; `min f′ = -1` at the origin.
    NegXGaussian,
}

/// `h_k(x) = H_k(x) e^{-x²}` (physicists' Hermite) for `k = 0..=kmax`.
pub(crate) fn hermite_weighted(x: f64, kmax: u32) -> Vec<f64> {
    let mut h = Vec::with_capacity(kmax as usize + 1);
    let w = (-x * x).exp();
    h.push(w);
    if kmax >= 1 {
        h.push(2.0 * x * w);
    }
    for k in 1..kmax as usize {
        let next = 2.0 * x * h[k] - 2.0 * k as f64 * h[k - 1];
        h.push(next);
    }
    h
}

fn double_factorial_odd(k: i64) -> f64 {
    // (2k-1)!! with (-1)!! = 1
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

/// `sup_x |H_k(x)| e^{-x²}` by a dense scan and golden-section refinement.
pub fn hermite_sup(k: u32) -> f64 {
    let reach = (2.0 * k as f64 + 1.0).sqrt() + 3.0;
    let n = 4000 + 400 * k as usize;
    let f = |x: f64| hermite_weighted(x, k)[k as usize].abs();
    let dx = reach / n as f64;
    let (mut best_x, mut best) = (0.0, f(0.0));
    for i in 1..=n {
        let x = i as f64 * dx;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - dx).max(0.0), best_x + dx);
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

impl BaseProfile {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BaseProfile::Gaussian => (-x * x).exp(),
            BaseProfile::NegXGaussian => -x * (-x * x).exp(),
        }
    }

    /// Order of the Hermite function giving `f^{(n)}` and its prefactor.
    fn hermite_index(self, n: u32) -> (u32, f64) {
        match self {
            BaseProfile::Gaussian => (n, 1.0),
            BaseProfile::NegXGaussian => (n + 1, 0.5),
        }
    }

    /// `f^{(n)}(x)`.
    pub fn derivative(self, n: u32, x: f64) -> f64 {
        let (k, pre) = self.hermite_index(n);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        pre * sign * hermite_weighted(x, k)[k as usize]
    }

    /// `‖f^{(n)}‖_∞`.
    pub fn sup_norm(self, n: u32) -> f64 {
        let (k, pre) = self.hermite_index(n);
        pre * hermite_sup(k)
    }

    /// Cramér bound on `‖f^{(n)}‖_∞`.
    pub fn sup_norm_bound_ln(self, n: u32) -> f64 {
        let (k, pre) = self.hermite_index(n);
        let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
        pre.ln() + CRAMER.ln() + 0.5 * (k as f64 * 2.0_f64.ln() + ln_fact)
    }

    /// `‖f^{(k)}‖²_{L²(ℝ)}`, closed form.
    pub fn l2_norm_sq(self, k: u32) -> f64 {
        let root = (2.0 * std::f64::consts::PI).sqrt();
        match self {
            BaseProfile::Gaussian => 0.5 * root * double_factorial_odd(k as i64),
            BaseProfile::NegXGaussian => 0.125 * root * double_factorial_odd(k as i64 + 1),
        }
    }

    /// `min f′`.
    pub fn min_slope(self) -> f64 {
        match self {
            BaseProfile::Gaussian => -(2.0_f64).sqrt() * (-0.5_f64).exp(),
            BaseProfile::NegXGaussian => -1.0,
        }
    }
}

/// `u₀(x) = A f(x/λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledFamily {
    pub profile: BaseProfile,
    pub amplitude: f64,
    pub width: f64,
}

impl ScaledFamily {
    pub fn new(profile: BaseProfile, amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude must be positive, got {amplitude}")));
        }
        if !(width >= 1.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("width must be >= 1, got {width}")));
        }
        Ok(Self {
            profile,
            amplitude,
            width,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * self.profile.eval(x / self.width)
    }

    /// `m(0) = (A/λ) min f′`.
    pub fn min_slope(&self) -> f64 {
        self.amplitude / self.width * self.profile.min_slope()
    }

    /// `ln ‖u₀^{(n)}‖_∞ = ln A - n ln λ + ln ‖f^{(n)}‖_∞`.
    pub fn sup_norm_ln(&self, n: u32) -> f64 {
        self.amplitude.ln() - n as f64 * self.width.ln() + self.profile.sup_norm(n).ln()
    }

    pub fn sup_norm(&self, n: u32) -> f64 {
        self.sup_norm_ln(n).exp()
    }

    /// `‖u₀‖²_{H³} = Σ_{k≤3} A² λ^{1-2k} ‖f^{(k)}‖²`.
    pub fn h3_norm(&self) -> f64 {
        (0..=3)
            .map(|k| {
                self.amplitude * self.amplitude
                    * self.width.powi(1 - 2 * k as i32)
                    * self.profile.l2_norm_sq(k)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Same family with `(A, λ) → (k²A, kλ)`.
    pub fn rescaled(&self, k: f64) -> Result<Self> {
        Self::new(self.profile, k * k * self.amplitude, k * self.width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(f: impl Fn(f64) -> f64) -> f64 {
        // trapezoid on a wide interval; exponentially accurate for these integrands
        let (a, n) = (12.0, 24000);
        let h = 2.0 * a / n as f64;
        (0..=n).map(|i| f(-a + i as f64 * h)).sum::<f64>() * h
    }

    #[test]
    fn l2_norms_match_quadrature() {
        for p in [BaseProfile::Gaussian, BaseProfile::NegXGaussian] {
            for k in 0..=3 {
                let q = quad(|x| p.derivative(k, x).powi(2));
                assert!((q - p.l2_norm_sq(k)).abs() < 1e-10 * q, "{p:?} k={k}");
            }
        }
    }

    #[test]
    fn derivatives_match_closed_forms() {
        let p = BaseProfile::NegXGaussian;
        for &x in &[-1.3_f64, 0.0, 0.4, 2.2] {
            let e = (-x * x).exp();
            assert!((p.derivative(0, x) - (-x * e)).abs() < 1e-15);
            assert!((p.derivative(1, x) - (-(1.0 - 2.0 * x * x) * e)).abs() < 1e-14);
            assert!((p.derivative(2, x) - ((6.0 * x - 4.0 * x * x * x) * e)).abs() < 1e-13);
        }
        let g = BaseProfile::Gaussian;
        assert!((g.derivative(1, 0.7) - (-1.4 * (-0.49_f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn sup_norms() {
        let p = BaseProfile::NegXGaussian;
        assert!((p.sup_norm(0) - (0.5_f64).sqrt() * (-0.5_f64).exp()).abs() < 1e-12);
        assert!((p.sup_norm(1) - 1.0).abs() < 1e-12);
        assert!((p.sup_norm(2) - 1.952).abs() < 1e-3);
        for n in 0..30 {
            assert!(p.sup_norm(n).ln() <= p.sup_norm_bound_ln(n) + 1e-12);
        }
        assert!((BaseProfile::Gaussian.min_slope() + 0.857_763_884_960_706_8).abs() < 1e-12);
    }

    #[test]
    fn scaling_laws() {
        let fam = ScaledFamily::new(BaseProfile::NegXGaussian, 3.0, 2.0).unwrap();
        assert_eq!(fam.min_slope(), -1.5);
        let direct = quad(|x| {
            let y = x / 2.0;
            (0..=3).map(|k| (3.0 * 2.0_f64.powi(-(k as i32)) * BaseProfile::NegXGaussian.derivative(k, y)).powi(2)).sum::<f64>()
        });
        // trapezoid over [-12, 12] in x covers |y| ≤ 6
        assert!((fam.h3_norm() - direct.sqrt()).abs() < 1e-9);
        assert!(ScaledFamily::new(BaseProfile::Gaussian, 1.0, 0.5).is_err());
    }
}
