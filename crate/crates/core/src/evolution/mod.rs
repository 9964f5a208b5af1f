//! Time integration of the equation family
//!
//! ```text
//! u_t + α u u_x + β u_xxx + ν (Λ^{1/2} + HΛ^{1/2}) u = 0
//! ```
//!
//! by fourth-order exponential time differencing (ETDRK4). In Fourier
//! space `û_t = -σ(ξ) û + N̂(u)` with `σ` the combined symbol and
//! `N̂ = -α iξ · P[(u²/2)^]`, where `P` is the two-thirds projection.

pub mod breaking;
pub mod integrate;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlocal::{combined_symbol, Sign, HILBERT_SIGN};
use crate::scalar::Real;
use crate::spectral::{GridField, SpectralGrid};

pub use breaking::{detect_breaking, detect_breaking_samples, BreakingReport, BreakingVerdict};
pub use integrate::{integrate, B7Policy, DeltaPolicy, MonitorSet, Sample, Termination, Trajectory};

/// Coefficients of `u_t + α u u_x + β u_xxx + ν(Λ^{1/2} + HΛ^{1/2})u = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
}

impl EquationSpec {
    pub fn new(alpha: f64, beta: f64, nu: f64) -> Result<Self> {
        let s = Self { alpha, beta, nu };
        s.validate()?;
        Ok(s)
    }

    /// `α = 1, β = 0, ν = 1`.
    pub fn canonical() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            nu: 1.0,
        }
    }

    pub fn burgers() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            nu: 0.0,
        }
    }

    /// Long-wave regimes: `α = 3/2`, `β = 1/6`, with the given `ν`.
    pub fn long_wave(nu: f64) -> Self {
        Self {
            alpha: 1.5,
            beta: 1.0 / 6.0,
            nu,
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == Self::canonical()
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.beta, self.nu].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("equation coefficients must be finite".into()));
        }
        if self.nu < 0.0 {
            return Err(Error::InvalidArgument(format!("nu must be >= 0, got {}", self.nu)));
        }
        if self.alpha == 0.0 && self.beta == 0.0 && self.nu == 0.0 {
            return Err(Error::InvalidArgument(
                "at least one of alpha, beta, nu must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolverState<T: Real> {
    pub t: T,
    pub u: GridField<T>,
    pub dt: T,
    pub step_count: u64,
}

impl<T: Real> SolverState<T> {
    pub fn new(u: GridField<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let u = u.with_time(T::zero());
        Ok(Self {
            t: T::zero(),
            u,
            dt,
            step_count: 0,
        })
    }
}

/// Step-size and run-control parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub slope_safety: f64,
    pub sample_stride: usize,
    /// Stop once `m(t) ≤ breaking_factor · m(0)`.
    pub breaking_factor: f64,
    /// Energy fraction in the top third of the retained band that raises
    /// the resolution warning.
    pub resolution_warn: f64,
    /// Slope-spectrum tail fraction above which samples are no longer
    /// considered reliable.
    pub reliable_tail: f64,
    pub strict_resolution: bool,
    pub max_steps: u64,
    pub snapshot_stride: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            dt_min: 1e-12,
            dt_max: 1e-2,
            slope_safety: 0.1,
            sample_stride: 1,
            breaking_factor: 100.0,
            resolution_warn: 1e-2,
            reliable_tail: 1e-6,
            strict_resolution: false,
            max_steps: 2_000_000,
            snapshot_stride: 0,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl must lie in (0, 1]");
        }
        if !(self.dt_min > 0.0) {
            return bad("dt_min must be positive");
        }
        if !(self.dt_max >= self.dt_min) {
            return bad("dt_max must be >= dt_min");
        }
        if !(self.slope_safety > 0.0) {
            return bad("slope_safety must be positive");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be >= 1");
        }
        if !(self.breaking_factor > 1.0) {
            return bad("breaking_factor must exceed 1");
        }
        if !(self.resolution_warn > 0.0 && self.reliable_tail > 0.0) {
            return bad("resolution thresholds must be positive");
        }
        Ok(())
    }
}

/// Step size proposed by [`choose_dt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtChoice<T> {
    pub dt: T,
    /// The unclamped step fell below `dt_min`.
    pub pinned_at_min: bool,
}

/// `clamp(cfl · min(Δx / (|α| ‖u‖_∞ + ε), c_s / ‖u_x‖_∞), dt_min, dt_max)`.
pub fn choose_dt<T: Real>(grid: &SpectralGrid<T>, u: &GridField<T>, spec: &EquationSpec, cfg: &StepControl) -> Result<DtChoice<T>> {
    let ux = grid.derivative(u, 1)?;
    Ok(dt_from_norms(
        grid.dx(),
        u.sup_norm(),
        ux.sup_norm(),
        spec,
        cfg,
    ))
}

pub(crate) fn dt_from_norms<T: Real>(dx: T, u_sup: T, ux_sup: T, spec: &EquationSpec, cfg: &StepControl) -> DtChoice<T> {
    let alpha = T::lit(spec.alpha.abs());
    let advective = dx / (alpha * u_sup + T::epsilon());
    let slope = if ux_sup > T::zero() {
        T::lit(cfg.slope_safety) / ux_sup
    } else {
        T::infinity()
    };
    let raw = T::lit(cfg.cfl) * advective.min(slope);
    let (lo, hi) = (T::lit(cfg.dt_min), T::lit(cfg.dt_max));
    DtChoice {
        dt: raw.max(lo).min(hi),
        pinned_at_min: raw < lo,
    }
}

/// Multiplies each mode by `exp(-t σ(ξ))`; the nonlinear term is ignored.
pub fn linear_exact<T: Real>(u: &GridField<T>, spec: &EquationSpec, t: T) -> Result<GridField<T>> {
    let grid = SpectralGrid::for_field(u)?;
    linear_exact_on(&grid, u, spec, t, HILBERT_SIGN)
}

pub fn linear_exact_on<T: Real>(grid: &SpectralGrid<T>, u: &GridField<T>, spec: &EquationSpec, t: T, sign: Sign) -> Result<GridField<T>> {
    let sym = combined_symbol(grid, spec, sign);
    let table: Vec<Complex<T>> = sym.table().iter().map(|&s| (-s * t).exp()).collect();
    let out = grid.apply_symbol(u, &table)?;
    Ok(match u.time_tag() {
        Some(t0) => out.with_time(t0 + t),
        None => out,
    })
}

/// Points on the unit circle used for the φ-function contour means.
const CONTOUR_POINTS: usize = 32;
/// Below this `|z|` the φ-functions come from contour means.
const CONTOUR_SWITCH: f64 = 0.5;

struct PhiTable<T> {
    shifts: Vec<Complex<T>>,
    exp_shifts: Vec<Complex<T>>,
}

impl<T: Real> PhiTable<T> {
    fn new() -> Self {
        let m = T::from_usize(CONTOUR_POINTS).unwrap();
        let shifts: Vec<Complex<T>> = (0..CONTOUR_POINTS)
            .map(|j| {
                let theta = T::PI() * (T::from_usize(j).unwrap() + T::lit(0.5)) / m;
                Complex::from_polar(T::one(), theta * T::lit(2.0))
            })
            .collect();
        let exp_shifts = shifts.iter().map(|w| w.exp()).collect();
        Self { shifts, exp_shifts }
    }

    /// `(e^z, φ1(z), φ2(z), φ3(z))`.
    fn eval(&self, z: Complex<T>) -> [Complex<T>; 4] {
        let ez = z.exp();
        let one = Complex::new(T::one(), T::zero());
        let half = T::lit(0.5);
        if z.norm() >= T::lit(CONTOUR_SWITCH) {
            let p1 = (ez - one) / z;
            let p2 = (ez - one - z) / (z * z);
            let p3 = (ez - one - z - z * z * half) / (z * z * z);
            return [ez, p1, p2, p3];
        }
        let mut acc = [Complex::zero(); 3];
        for (w, ew) in self.shifts.iter().zip(&self.exp_shifts) {
            let zw = z + w;
            let e = ez * ew;
            let p1 = (e - one) / zw;
            let p2 = (p1 - one) / zw;
            let p3 = (p2 - one * half) / zw;
            acc[0] = acc[0] + p1;
            acc[1] = acc[1] + p2;
            acc[2] = acc[2] + p3;
        }
        let m = T::from_usize(CONTOUR_POINTS).unwrap();
        // the functions are real on the real axis
        let fix = |c: Complex<T>| {
            let c = c / m;
            if z.im == T::zero() {
                Complex::new(c.re, T::zero())
            } else {
                c
            }
        };
        [ez, fix(acc[0]), fix(acc[1]), fix(acc[2])]
    }
}

struct Coefficients<T> {
    dt: T,
    e: Vec<Complex<T>>,
    e2: Vec<Complex<T>>,
    q: Vec<Complex<T>>,
    f1: Vec<Complex<T>>,
    f2: Vec<Complex<T>>,
    f3: Vec<Complex<T>>,
}

/// ETDRK4 integrator for one grid and equation.
pub struct Stepper<T: Real> {
    grid: SpectralGrid<T>,
    spec: EquationSpec,
    sign: Sign,
    linear: Vec<Complex<T>>,
    nonlinear: Vec<Complex<T>>,
    phi: PhiTable<T>,
    cache: Option<Coefficients<T>>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: SpectralGrid<T>, spec: EquationSpec) -> Result<Self> {
        Self::with_sign(grid, spec, HILBERT_SIGN)
    }

    pub fn with_sign(grid: SpectralGrid<T>, spec: EquationSpec, sign: Sign) -> Result<Self> {
        spec.validate()?;
        let linear = combined_symbol(&grid, &spec, sign)
            .table()
            .iter()
            .map(|&s| -s)
            .collect();
        let n = grid.n_points();
        let alpha = T::lit(spec.alpha);
        let nonlinear = grid
            .frequencies()
            .iter()
            .enumerate()
            .map(|(k, &xi)| {
                let j = crate::spectral::mode_of_index(k, n);
                if 3 * j.unsigned_abs() as usize > n {
                    Complex::zero()
                } else {
                    Complex::new(T::zero(), -alpha * xi)
                }
            })
            .collect();
        Ok(Self {
            grid,
            spec,
            sign,
            linear,
            nonlinear,
            phi: PhiTable::new(),
            cache: None,
        })
    }

    pub fn grid(&self) -> &SpectralGrid<T> {
        &self.grid
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    fn coefficients(&mut self, dt: T) -> &Coefficients<T> {
        let fresh = matches!(&self.cache, Some(c) if c.dt == dt);
        if !fresh {
            let n = self.linear.len();
            let mut c = Coefficients {
                dt,
                e: Vec::with_capacity(n),
                e2: Vec::with_capacity(n),
                q: Vec::with_capacity(n),
                f1: Vec::with_capacity(n),
                f2: Vec::with_capacity(n),
                f3: Vec::with_capacity(n),
            };
            let half = T::lit(0.5);
            let (two, three, four) = (T::lit(2.0), T::lit(3.0), T::lit(4.0));
            for &l in &self.linear {
                let z = l * dt;
                let [ez, p1, p2, p3] = self.phi.eval(z);
                let [ez2, h1, _, _] = self.phi.eval(z * half);
                c.e.push(ez);
                c.e2.push(ez2);
                c.q.push(h1 * (dt * half));
                c.f1.push((p1 - p2 * three + p3 * four) * dt);
                c.f2.push((p2 - p3 * two) * dt);
                c.f3.push((p3 * four - p2) * dt);
            }
            self.cache = Some(c);
        }
        self.cache.as_ref().unwrap()
    }

    /// `N̂(v) = -α iξ P[(u²/2)^]` with `u` the field of `v`.
    pub(crate) fn nonlinear_term(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        if self.spec.alpha == 0.0 {
            return vec![Complex::zero(); v.len()];
        }
        let u = self.grid.inverse_values(v);
        let half = T::lit(0.5);
        let sq: Vec<T> = u.iter().map(|&x| half * x * x).collect();
        let w = self.grid.forward_values(&sq);
        w.iter().zip(&self.nonlinear).map(|(&a, &b)| a * b).collect()
    }

    /// Time derivative `u_t` of a spectral state.
    pub(crate) fn rate(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut r = self.nonlinear_term(v);
        for ((rk, &vk), &lk) in r.iter_mut().zip(v).zip(&self.linear) {
            *rk = *rk + lk * vk;
        }
        r
    }

    /// One ETDRK4 step on spectral coefficients, in place.
    pub fn step_spectral(&mut self, v: &mut [Complex<T>], dt: T) {
        let nv = self.nonlinear_term(v);
        let c = self.coefficients(dt);
        let n = v.len();
        let mut a = vec![Complex::zero(); n];
        for k in 0..n {
            a[k] = c.e2[k] * v[k] + c.q[k] * nv[k];
        }
        // borrow juggling: the cache lives in self
        let na = self.nonlinear_term(&a);
        let c = self.cache.as_ref().unwrap();
        let mut b = vec![Complex::zero(); n];
        for k in 0..n {
            b[k] = c.e2[k] * v[k] + c.q[k] * na[k];
        }
        let nb = self.nonlinear_term(&b);
        let c = self.cache.as_ref().unwrap();
        let two = T::lit(2.0);
        let mut cc = vec![Complex::zero(); n];
        for k in 0..n {
            cc[k] = c.e2[k] * a[k] + c.q[k] * (nb[k] * two - nv[k]);
        }
        let nc = self.nonlinear_term(&cc);
        let c = self.cache.as_ref().unwrap();
        for k in 0..n {
            v[k] = c.e[k] * v[k] + c.f1[k] * nv[k] + c.f2[k] * (na[k] + nb[k]) * two + c.f3[k] * nc[k];
        }
    }

    /// Advances `state` by `dt`. A non-finite result is reported as
    /// [`Error::BlowupOverflow`] and leaves the input untouched.
    pub fn step(&mut self, state: &SolverState<T>, dt: T) -> Result<SolverState<T>> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        self.grid.check_field(&state.u)?;
        let mut v = self.grid.forward_values(state.u.values());
        self.step_spectral(&mut v, dt);
        let t = state.t + dt;
        let values = self.grid.inverse_values(&v);
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowupOverflow { t: t.to_f64_lossy() });
        }
        Ok(SolverState {
            t,
            u: GridField::new(self.grid.half_length(), values)?.with_time(t),
            dt,
            step_count: state.step_count + 1,
        })
    }
}

/// One ETDRK4 step of `spec` from `state`.
pub fn step<T: Real>(state: &SolverState<T>, spec: &EquationSpec, dt: T) -> Result<SolverState<T>> {
    let grid = SpectralGrid::for_field(&state.u)?;
    Stepper::new(grid, *spec)?.step(state, dt)
}
