//! Lagrangian diagnostics: particles following `dX/dt = α u(X, t)`, the
//! global minimum slope `m(t)`, the ratio `q = m(0)/m(t)`, and the label
//! sets `Σ_γ(t) = { x : v₁(t; x) ≤ (1 - γ) m(t) }`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{wrap_periodic, GridField, SpectralGrid};

/// Tail fraction of the field spectrum above which particle samples are flagged.
pub const UNRESOLVED_TAIL: f64 = 1e-8;

/// Particles with their labels, positions and sampled `u`, `u_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicBundle<T> {
    half_length: T,
    labels: Vec<T>,
    positions: Vec<T>,
    v0: Vec<T>,
    v1: Vec<T>,
    unresolved: bool,
}

impl<T: Real> CharacteristicBundle<T> {
    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn v0(&self) -> &[T] {
        &self.v0
    }

    pub fn v1(&self) -> &[T] {
        &self.v1
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Set once a step sampled a field whose spectrum was not resolved.
    pub fn unresolved(&self) -> bool {
        self.unresolved
    }

    fn resample(&mut self, grid: &SpectralGrid<T>, u: &GridField<T>) -> Result<()> {
        let f = grid.interpolant(u)?;
        let fx = grid.derivative_interpolant(u, 1)?;
        self.v0 = f.eval_many(&self.positions);
        self.v1 = fx.eval_many(&self.positions);
        let n = grid.n_points();
        let tail = grid.transform(u)?.tail_energy_fraction(n / 3, 0);
        if tail.to_f64_lossy() > UNRESOLVED_TAIL {
            self.unresolved = true;
        }
        Ok(())
    }
}

/// Places particles at `xs` and samples `u0`, `∂ₓu0` there.
pub fn seed<T: Real>(grid: &SpectralGrid<T>, u0: &GridField<T>, xs: &[T]) -> Result<CharacteristicBundle<T>> {
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("a bundle needs at least two labels".into()));
    }
    if let Some(index) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let l = grid.half_length();
    let positions: Vec<T> = xs.iter().map(|&x| wrap_periodic(x, l)).collect();
    let mut b = CharacteristicBundle {
        half_length: l,
        labels: xs.to_vec(),
        positions,
        v0: Vec::new(),
        v1: Vec::new(),
        unresolved: false,
    };
    b.resample(grid, u0)?;
    Ok(b)
}

/// Classical RK4 on `dX/dt = speed · u(X, t)` over `[t0, t0 + dt]`, with
/// `u_provider` queried at `t0`, `t0 + dt/2` and `t0 + dt`. `v0`, `v1` are
/// then re-sampled from the field at `t0 + dt`.
pub fn advance<T: Real>(
    bundle: &CharacteristicBundle<T>,
    grid: &SpectralGrid<T>,
    mut u_provider: impl FnMut(T) -> Result<GridField<T>>,
    t0: T,
    dt: T,
    speed: T,
) -> Result<CharacteristicBundle<T>> {
    let half = T::lit(0.5);
    let u_start = u_provider(t0)?;
    let u_mid = u_provider(t0 + dt * half)?;
    let u_end = u_provider(t0 + dt)?;
    let f0 = grid.interpolant(&u_start)?;
    let fm = grid.interpolant(&u_mid)?;
    let f1 = grid.interpolant(&u_end)?;
    let (two, six) = (T::lit(2.0), T::lit(6.0));
    let positions = bundle
        .positions
        .iter()
        .map(|&x| {
            let k1 = speed * f0.eval(x);
            let k2 = speed * fm.eval(x + dt * half * k1);
            let k3 = speed * fm.eval(x + dt * half * k2);
            let k4 = speed * f1.eval(x + dt * k3);
            wrap_periodic(x + dt / six * (k1 + two * k2 + two * k3 + k4), bundle.half_length)
        })
        .collect();
    let mut out = CharacteristicBundle {
        positions,
        ..bundle.clone()
    };
    out.resample(grid, &u_end)?;
    Ok(out)
}

/// Minimum of `u_x` and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSlope<T> {
    pub m: T,
    pub x_at: T,
}

/// Grid minimum of `∂ₓu` refined by one Newton step on the interpolant of
/// `∂ₓ²u`. The step is skipped when `∂ₓ³u ≤ 0` or it would move more than
/// one cell.
pub fn min_slope<T: Real>(grid: &SpectralGrid<T>, u: &GridField<T>) -> Result<MinSlope<T>> {
    let ux = grid.derivative(u, 1)?;
    let (k, &m_grid) = ux
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let x0 = grid.nodes()[k];
    let best = MinSlope { m: m_grid, x_at: x0 };
    let uxx = grid.derivative_interpolant(u, 2)?;
    let uxxx = grid.derivative_interpolant(u, 3)?;
    let curv = uxxx.eval(x0);
    if !(curv > T::zero()) {
        return Ok(best);
    }
    let step = uxx.eval(x0) / curv;
    if !(step.abs() <= grid.dx()) {
        return Ok(best);
    }
    let x1 = x0 - step;
    let m1 = grid.derivative_interpolant(u, 1)?.eval(x1);
    if m1 < m_grid {
        Ok(MinSlope {
            m: m1,
            x_at: wrap_periodic(x1, grid.half_length()),
        })
    } else {
        Ok(best)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSample {
    pub t: f64,
    pub m: f64,
    pub argmin: f64,
    pub q: f64,
}

/// History of `m(t)` and `q(t) = m(0)/m(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeTracker {
    pub m0: f64,
    pub samples: Vec<SlopeSample>,
    /// Set when a non-negative minimum slope was recorded.
    pub anomaly: bool,
}

impl SlopeTracker {
    pub fn new(m0: f64) -> Result<Self> {
        if !(m0 < 0.0) {
            return Err(Error::Domain(format!("slope tracking needs m0 < 0, got {m0}")));
        }
        Ok(Self {
            m0,
            samples: Vec::new(),
            anomaly: false,
        })
    }

    pub fn record(&mut self, t: f64, m: f64, argmin: f64) -> SlopeSample {
        if !(m < 0.0) {
            self.anomaly = true;
        }
        let q = if m < 0.0 { self.m0 / m } else { f64::NAN };
        let s = SlopeSample { t, m, argmin, q };
        self.samples.push(s);
        s
    }

    pub fn track<T: Real>(&mut self, t: T, grid: &SpectralGrid<T>, u: &GridField<T>) -> Result<SlopeSample> {
        let ms = min_slope(grid, u)?;
        Ok(self.record(t.to_f64_lossy(), ms.m.to_f64_lossy(), ms.x_at.to_f64_lossy()))
    }

    /// Largest increase between consecutive `q` samples (`≤ 0` when monotone).
    pub fn max_q_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].q - w[0].q)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    /// Within tolerance of the threshold.
    Ambiguous,
}

/// `Σ_γ` at one time, as indices into a fixed label array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSet {
    pub gamma: f64,
    pub threshold: f64,
    pub membership: Vec<Membership>,
}

impl SigmaSet {
    pub fn member_indices(&self) -> Vec<usize> {
        self.indices(Membership::In)
    }

    pub fn ambiguous_indices(&self) -> Vec<usize> {
        self.indices(Membership::Ambiguous)
    }

    fn indices(&self, which: Membership) -> Vec<usize> {
        self.membership
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == which)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Relative width of the ambiguous band around the `Σ_γ` threshold.
pub const SIGMA_REL_TOL: f64 = 1e-8;

/// Classifies slopes against `(1 - γ) m` with an absolute band `tol`.
pub fn classify_slopes(v1: &[f64], gamma: f64, m: f64, tol: f64) -> Result<SigmaSet> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(m < 0.0) {
        return Err(Error::Domain(format!("Σ_γ needs m < 0, got {m}")));
    }
    let threshold = (1.0 - gamma) * m;
    let membership = v1
        .iter()
        .map(|&v| {
            if (v - threshold).abs() <= tol {
                Membership::Ambiguous
            } else if v < threshold {
                Membership::In
            } else {
                Membership::Out
            }
        })
        .collect();
    Ok(SigmaSet {
        gamma,
        threshold,
        membership,
    })
}

/// `Σ_γ` on the labels currently at `positions`, using interpolated `u_x`.
pub fn sigma_members<T: Real>(grid: &SpectralGrid<T>, u: &GridField<T>, gamma: f64, m: f64, positions: &[T]) -> Result<SigmaSet> {
    let fx = grid.derivative_interpolant(u, 1)?;
    let v1: Vec<f64> = positions.iter().map(|&x| fx.eval(x).to_f64_lossy()).collect();
    classify_slopes(&v1, gamma, m, SIGMA_REL_TOL * m.abs())
}

/// A label that left `Σ_γ` and later re-entered it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingViolation {
    pub label: usize,
    pub left_at: usize,
    pub reentered_at: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NestingReport {
    pub snapshots: usize,
    pub labels: usize,
    pub strict_violations: Vec<NestingViolation>,
    pub ambiguous_events: usize,
}

impl NestingReport {
    pub fn holds(&self) -> bool {
        self.strict_violations.is_empty()
    }
}

/// Checks `Σ_γ(t₂) ⊆ Σ_γ(t₁)` for consecutive snapshots: per label the
/// membership sequence must read in, ..., in, out, ..., out. Ambiguous
/// entries never count as violations.
pub fn check_nesting(history: &[SigmaSet]) -> NestingReport {
    let labels = history.first().map_or(0, |s| s.membership.len());
    let mut report = NestingReport {
        snapshots: history.len(),
        labels,
        ..Default::default()
    };
    for label in 0..labels {
        let mut left_at = None;
        for (t, set) in history.iter().enumerate() {
            match set.membership[label] {
                Membership::Out => {
                    left_at.get_or_insert(t);
                }
                Membership::In => {
                    if let Some(l) = left_at {
                        report.strict_violations.push(NestingViolation {
                            label,
                            left_at: l,
                            reentered_at: t,
                        });
                        left_at = None;
                    }
                }
                Membership::Ambiguous => report.ambiguous_events += 1,
            }
        }
    }
    report
}

/// `count` uniformly spaced labels spanning the region where `u_x < 0`
/// (between the first and last negative-slope grid nodes).
pub fn negative_slope_labels<T: Real>(grid: &SpectralGrid<T>, u0: &GridField<T>, count: usize) -> Result<Vec<T>> {
    let ux = grid.derivative(u0, 1)?;
    let nodes = grid.nodes();
    let neg: Vec<usize> = (0..nodes.len()).filter(|&k| ux.values()[k] < T::zero()).collect();
    if neg.is_empty() || count < 2 {
        return Ok(Vec::new());
    }
    let (a, b) = (nodes[neg[0]], nodes[*neg.last().unwrap()]);
    let span = b - a;
    Ok((0..count)
        .map(|i| a + span * T::from_usize(i).unwrap() / T::from_usize(count - 1).unwrap())
        .collect())
}
