//! Adaptive integration with per-sample diagnostics.

use serde::{Deserialize, Serialize};

use super::{dt_from_norms, SolverState, StepControl, Stepper};
use crate::certificates::monitors::{self, balanced_delta, riccati_residuals, BoundChecker};
use crate::characteristics::{
    advance, check_nesting, classify_slopes, min_slope, negative_slope_labels, seed, CharacteristicBundle,
    NestingReport, SigmaSet, SIGMA_REL_TOL,
};
use crate::error::{Error, Result};
use crate::evolution::EquationSpec;
use crate::nonlocal::{combined_symbol, MultiplierOp, HILBERT_SIGN};
use crate::scalar::Real;
use crate::spectral::{GridField, SpectralGrid};

/// How `δ` is chosen for the two-scale bound monitor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DeltaPolicy {
    Fixed(f64),
    /// `δ = ‖vₙ‖ / ‖vₙ₊₁‖`, minimizing the right side.
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct B7Policy {
    pub n: u32,
    pub delta: DeltaPolicy,
}

/// Monitors evaluated at every sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorSet {
    /// `ε` of the premise `|K₁ + φ₁| ≤ ε² m²`.
    pub g5_epsilon: Option<f64>,
    pub b7: Option<B7Policy>,
    /// `γ` for tracking `Σ_γ` on characteristic labels.
    pub nesting_gamma: Option<f64>,
    pub q_monotone: bool,
    /// Number of labels seeded over the negative-slope region.
    pub n_labels: usize,
}

impl MonitorSet {
    pub fn none() -> Self {
        Self::default()
    }
}

/// Diagnostics recorded at one sample time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub m: f64,
    pub argmin_x: f64,
    pub q: f64,
    pub mass: f64,
    pub l2_norm: f64,
    pub dt: f64,
    pub u_sup: f64,
    /// Energy fraction in the top third of the retained band.
    pub tail_fraction: f64,
    /// Same fraction for the spectrum of `u_x`.
    pub slope_tail: f64,
    pub reliable: bool,
    pub g5_ok: Option<bool>,
    pub g5_lhs: Option<f64>,
    pub b7_ok: Option<bool>,
    pub b7_required_constant: Option<f64>,
    /// Linear forcing of the slope equation at the minimizing point.
    pub forcing_at_min: f64,
    pub riccati_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// `m(t) ≤ Θ m(0)`.
    BreakingThreshold,
    /// Step size pinned at `dt_min` while `m` kept decreasing.
    DtPinned,
    /// Non-finite state; the trajectory ends at the last finite one.
    Overflow,
    /// Strict mode and the resolution warning fired.
    ResolutionExhausted,
    MaxSteps,
}

impl Termination {
    pub fn by_breaking(self) -> bool {
        matches!(self, Termination::BreakingThreshold | Termination::DtPinned | Termination::Overflow)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub spec: EquationSpec,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<GridField<T>>,
    pub final_state: SolverState<T>,
    pub termination: Termination,
    pub steps: u64,
    pub m0: f64,
    pub resolution_warning: bool,
    pub near_breaking: bool,
    pub slope_anomaly: bool,
    /// Relative L² size of the modes removed by the initial projection.
    pub projection_defect: f64,
    pub last_reliable_time: f64,
    pub nesting: Option<NestingReport>,
    pub particles_unresolved: bool,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn reliable_samples(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.reliable)
    }

    /// Every reliable sample carried a satisfied `g5` check.
    pub fn g5_held(&self) -> bool {
        self.reliable_samples().all(|s| s.g5_ok == Some(true))
    }

    /// Every reliable sample carried a satisfied two-scale bound.
    pub fn b7_held(&self) -> bool {
        self.reliable_samples().all(|s| s.b7_ok != Some(false))
    }

    /// Largest `q(tᵢ₊₁) - q(tᵢ)` over reliable samples.
    pub fn max_q_increase(&self) -> f64 {
        let q: Vec<f64> = self.reliable_samples().map(|s| s.q).collect();
        q.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative growth of `‖u‖_{L²}` between consecutive samples.
    pub fn max_l2_growth(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].l2_norm / w[0].l2_norm - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|mean(u(t)) - mean(u(0))|`.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.samples.first().map_or(0.0, |s| s.mass);
        self.samples.iter().map(|s| (s.mass - m0).abs()).fold(0.0, f64::max)
    }
}

struct Sampler<T: Real> {
    grid: SpectralGrid<T>,
    forcing_op: MultiplierOp<T>,
    pair: MultiplierOp<T>,
    bound: Option<BoundChecker<T>>,
    monitors: MonitorSet,
    cfg: StepControl,
    nu: f64,
}

impl<T: Real> Sampler<T> {
    fn sample(&self, state: &SolverState<T>, m0: Option<f64>) -> Result<Sample> {
        let g = &self.grid;
        let u = &state.u;
        let ms = min_slope(g, u)?;
        let (m, x_at) = (ms.m.to_f64_lossy(), ms.x_at.to_f64_lossy());
        let ux = g.derivative(u, 1)?;
        let forcing = self.forcing_op.apply(g, &ux)?;
        let forcing_at_min = g.interpolate(&forcing, &[ms.x_at])?[0].to_f64_lossy();
        let n = g.n_points();
        let spectrum = g.transform(u)?;
        let cutoff = 2 * (n / 3) / 3;
        let tail_fraction = spectrum.tail_energy_fraction(cutoff, 0).to_f64_lossy();
        let slope_tail = spectrum.tail_energy_fraction(cutoff, 1).to_f64_lossy();
        let q = match m0 {
            Some(m0) if m < 0.0 => m0 / m,
            _ => f64::NAN,
        };
        let (g5_ok, g5_lhs) = match self.monitors.g5_epsilon {
            Some(eps) if m < 0.0 => {
                let lhs = self.pair.apply(g, &ux)?.sup_norm().to_f64_lossy() * self.nu;
                let s = monitors::g5_from_norm(lhs, m, eps)?;
                (Some(s.holds), Some(s.lhs))
            }
            Some(_) => (Some(false), None),
            None => (None, None),
        };
        let (b7_ok, b7_required_constant) = match (&self.bound, self.monitors.b7) {
            (Some(checker), Some(policy)) => {
                let (vn, vn1, lhs, resolved) = checker.norms(u, policy.n)?;
                let delta = match policy.delta {
                    DeltaPolicy::Fixed(d) => Some(d),
                    DeltaPolicy::Balanced => balanced_delta(vn, vn1),
                };
                match delta {
                    Some(d) => {
                        let s = monitors::bound_sample(policy.n, d, lhs, vn, vn1, resolved);
                        (Some(s.holds), Some(s.required_constant()))
                    }
                    None => (Some(lhs == 0.0), None),
                }
            }
            _ => (None, None),
        };
        Ok(Sample {
            t: state.t.to_f64_lossy(),
            m,
            argmin_x: x_at,
            q,
            mass: u.mean().to_f64_lossy(),
            l2_norm: u.l2_norm().to_f64_lossy(),
            dt: state.dt.to_f64_lossy(),
            u_sup: u.sup_norm().to_f64_lossy(),
            tail_fraction,
            slope_tail,
            reliable: slope_tail <= self.cfg.reliable_tail,
            g5_ok,
            g5_lhs,
            b7_ok,
            b7_required_constant,
            forcing_at_min,
            riccati_residual: None,
        })
    }
}

/// Advances `state` to `t_end` with [`choose_dt`](super::choose_dt) steps.
///
/// The initial field is first projected onto the two-thirds band, on which
/// the semi-discrete nonlinearity conserves energy exactly. The run stops
/// early once `m(t) ≤ Θ m(0)`, once `dt` is pinned at `dt_min` while `m`
/// decreases, or on overflow (keeping the last finite state).
pub fn integrate<T: Real>(
    state: SolverState<T>,
    spec: &EquationSpec,
    t_end: T,
    cfg: &StepControl,
    monitors: &MonitorSet,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    spec.validate()?;
    if !(t_end >= state.t) {
        return Err(Error::InvalidArgument(format!("t_end {t_end} precedes t = {}", state.t)));
    }
    let grid = SpectralGrid::for_field(&state.u)?;
    let mut stepper = Stepper::new(grid.clone(), *spec)?;

    let raw = grid.transform(&state.u)?;
    let projected = grid.inverse(&raw.dealias())?;
    let diff = state.u.axpby(T::one(), &projected, -T::one())?;
    let l2 = state.u.l2_norm();
    let projection_defect = if l2 > T::zero() {
        (diff.l2_norm() / l2).to_f64_lossy()
    } else {
        0.0
    };
    let mut state = SolverState {
        u: projected.with_time(state.t),
        ..state
    };

    let sampler = Sampler {
        forcing_op: combined_symbol(&grid, spec, HILBERT_SIGN),
        pair: crate::nonlocal::nonlocal_pair(&grid, HILBERT_SIGN),
        bound: monitors.b7.map(|_| BoundChecker::new(grid.clone())),
        grid: grid.clone(),
        monitors: *monitors,
        cfg: *cfg,
        nu: spec.nu,
    };

    let first = sampler.sample(&state, None)?;
    let m0 = first.m;
    let tracked_m0 = (m0 < 0.0).then_some(m0);
    let mut first = first;
    if tracked_m0.is_some() {
        first.q = 1.0;
    }
    let mut samples = vec![first];
    let mut snapshots = Vec::new();
    if cfg.snapshot_stride > 0 {
        snapshots.push(state.u.clone());
    }

    let mut bundle: Option<CharacteristicBundle<T>> = None;
    let mut sigma_history: Vec<(bool, SigmaSet)> = Vec::new();
    if let (Some(gamma), true) = (monitors.nesting_gamma, m0 < 0.0) {
        let labels = negative_slope_labels(&grid, &state.u, monitors.n_labels.max(2))?;
        if labels.len() >= 2 {
            let b = seed(&grid, &state.u, &labels)?;
            sigma_history.push((first.reliable, sigma_of(&b, gamma, m0)?));
            bundle = Some(b);
        }
    }

    let mut termination = Termination::Completed;
    let mut resolution_warning = first.tail_fraction > cfg.resolution_warn;
    let mut near_breaking = false;
    let mut slope_anomaly = false;
    let mut steps: u64 = 0;
    let mut pinned = false;
    let mut last_grad = grid.derivative(&state.u, 1)?.sup_norm();
    let speed = T::lit(spec.alpha);
    let tiny = t_end.abs().max(T::one()) * T::epsilon() * T::lit(16.0);

    loop {
        if state.t >= t_end - tiny {
            break;
        }
        if steps >= cfg.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        let ux_sup = grid.derivative(&state.u, 1)?.sup_norm();
        let choice = dt_from_norms(grid.dx(), state.u.sup_norm(), ux_sup, spec, cfg);
        if choice.pinned_at_min {
            pinned = true;
            if ux_sup > last_grad {
                near_breaking = true;
            }
        }
        last_grad = ux_sup;
        let dt = choice.dt.min(t_end - state.t);
        let next = match stepper.step(&state, dt) {
            Ok(s) => s,
            Err(Error::BlowupOverflow { .. }) => {
                termination = Termination::Overflow;
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(b) = &bundle {
            let mid = hermite_midpoint(&stepper, &state.u, &next.u, dt)?;
            let (t0, t1) = (state.t, next.t);
            let (u0, u1) = (&state.u, &next.u);
            let provider = |t: T| -> Result<GridField<T>> {
                Ok(if t == t0 {
                    u0.clone()
                } else if t == t1 {
                    u1.clone()
                } else {
                    mid.clone()
                })
            };
            bundle = Some(advance(b, &grid, provider, t0, dt, speed)?);
        }
        state = next;
        steps += 1;

        let at_end = state.t >= t_end - tiny;
        if steps % cfg.sample_stride as u64 != 0 && !at_end {
            continue;
        }
        let mut s = sampler.sample(&state, tracked_m0)?;
        let prev = *samples.last().unwrap();
        s.reliable &= prev.reliable;
        if tracked_m0.is_some() && !(s.m < 0.0) {
            slope_anomaly = true;
        }
        resolution_warning |= s.tail_fraction > cfg.resolution_warn;
        if let (Some(b), Some(gamma)) = (&bundle, monitors.nesting_gamma) {
            if s.m < 0.0 {
                sigma_history.push((s.reliable, sigma_of(b, gamma, s.m)?));
            }
        }
        samples.push(s);
        if cfg.snapshot_stride > 0 && (samples.len() - 1) % cfg.snapshot_stride == 0 {
            snapshots.push(state.u.clone());
        }
        if let Some(m0) = tracked_m0 {
            if s.m <= cfg.breaking_factor * m0 {
                termination = Termination::BreakingThreshold;
                break;
            }
            if pinned && s.m < prev.m {
                termination = Termination::DtPinned;
                break;
            }
        }
        pinned = false;
        if cfg.strict_resolution && s.tail_fraction > cfg.resolution_warn {
            termination = Termination::ResolutionExhausted;
            break;
        }
    }

    if samples.last().map(|s| s.t) != Some(state.t.to_f64_lossy()) {
        let mut s = sampler.sample(&state, tracked_m0)?;
        s.reliable &= samples.last().unwrap().reliable;
        samples.push(s);
    }

    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let m: Vec<f64> = samples.iter().map(|s| s.m).collect();
    let f: Vec<f64> = samples.iter().map(|s| s.forcing_at_min).collect();
    for (s, r) in samples.iter_mut().zip(riccati_residuals(&t, &m, &f, spec.alpha)) {
        s.riccati_residual = r;
    }

    let last_reliable_time = samples
        .iter()
        .take_while(|s| s.reliable)
        .last()
        .map_or(samples[0].t, |s| s.t);
    let nesting = monitors.nesting_gamma.map(|_| {
        let reliable: Vec<SigmaSet> = sigma_history
            .iter()
            .filter(|(r, _)| *r)
            .map(|(_, s)| s.clone())
            .collect();
        check_nesting(&reliable)
    });
    let particles_unresolved = bundle.as_ref().is_some_and(|b| b.unresolved());

    Ok(Trajectory {
        spec: *spec,
        samples,
        snapshots,
        final_state: state,
        termination,
        steps,
        m0,
        resolution_warning,
        near_breaking,
        slope_anomaly,
        projection_defect,
        last_reliable_time,
        nesting,
        particles_unresolved,
    })
}

fn sigma_of<T: Real>(b: &CharacteristicBundle<T>, gamma: f64, m: f64) -> Result<SigmaSet> {
    let v1: Vec<f64> = b.v1().iter().map(|v| v.to_f64_lossy()).collect();
    classify_slopes(&v1, gamma, m, SIGMA_REL_TOL * m.abs())
}

/// Cubic Hermite interpolation in time at the half step,
/// `(u₀ + u₁)/2 + dt/8 (u_t(u₀) - u_t(u₁))`.
fn hermite_midpoint<T: Real>(stepper: &Stepper<T>, u0: &GridField<T>, u1: &GridField<T>, dt: T) -> Result<GridField<T>> {
    let g = stepper.grid();
    let r0 = g.inverse_values(&stepper.rate(&g.forward_values(u0.values())));
    let r1 = g.inverse_values(&stepper.rate(&g.forward_values(u1.values())));
    let (half, eighth) = (T::lit(0.5), dt / T::lit(8.0));
    let values = u0
        .values()
        .iter()
        .zip(u1.values())
        .zip(r0.iter().zip(&r1))
        .map(|((&a, &b), (&ra, &rb))| half * (a + b) + eighth * (ra - rb))
        .collect();
    GridField::new(g.half_length(), values)
}
