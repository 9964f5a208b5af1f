//! Sufficient conditions for wave breaking, the breaking-time bracket,
//! the binomial sum lemma, and trajectory monitors.
//!
//! Conditions on the initial slope `m₀ = inf u₀′`:
//!
//! ```text
//! a1: ε² m₀² > 1 + 2‖u₀‖_{H³}
//! c5: ε² (1-ε)⁴ (-m₀)^{3/4} > 28 (1 + (1 + e² + e^{1/g}) g + g²)
//! d8: ε² (-m₀)^{1/4} > (9/4) e
//! b3: ‖u₀^{(n)}‖_∞ ≤ ((n-1) g)^{2(n-1)},  n = 2, 3, ...
//! ```
//!
//! Under them the breaking time obeys
//! `-1/((1+ε) m₀) < T < -1/((1-ε)² m₀)`.

pub mod family;
pub mod monitors;
pub mod stirling;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::characteristics::min_slope;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{GridField, SpectralGrid};

pub use family::{BaseProfile, ScaledFamily};
pub use monitors::{g5_monitor, kphi_bound_check, riccati_residual, BoundSample, G5Sample};
pub use stirling::{verify_stirling_lemma, StirlingReport};

/// Default highest derivative order checked for `b3` on grids.
pub const DEFAULT_N_MAX: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisParams {
    pub epsilon: f64,
    pub g: f64,
    /// `3/2 + 6ε`.
    pub sigma: f64,
    /// `2(‖u₀‖_∞ + ‖u₀′‖_∞)`.
    pub c0: f64,
    /// `2‖u₀′‖_∞`.
    pub c1: f64,
    /// `(-m₀)^{3/4}`.
    pub c2: f64,
    pub n_max: u32,
}

impl HypothesisParams {
    pub fn new(epsilon: f64, g: f64, n_max: u32, u_sup: f64, ux_sup: f64, m0: f64) -> Result<Self> {
        validate_inputs(epsilon, g, n_max)?;
        Ok(Self {
            epsilon,
            g,
            sigma: 1.5 + 6.0 * epsilon,
            c0: 2.0 * (u_sup + ux_sup),
            c1: 2.0 * ux_sup,
            c2: (-m0).max(0.0).powf(0.75),
            n_max,
        })
    }

    /// `σ < 2 - 20ε`, i.e. `ε < 1/52`.
    pub fn admissible(&self) -> bool {
        self.sigma < 2.0 - 20.0 * self.epsilon
    }
}

fn validate_inputs(epsilon: f64, g: f64, n_max: u32) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if !(g >= 1.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("g must be >= 1, got {g}")));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be >= 2, got {n_max}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Pass,
    Fail,
    Indeterminate,
}

/// One hypothesis, written so that it holds iff `lhs > rhs` (`b3`: `lhs ≥ rhs`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub status: ConditionStatus,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionRecord {
    fn strict(name: &str, lhs: f64, rhs: f64, resolved: bool) -> Self {
        let status = if !resolved {
            ConditionStatus::Indeterminate
        } else if lhs > rhs {
            ConditionStatus::Pass
        } else {
            ConditionStatus::Fail
        };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            pass: status == ConditionStatus::Pass,
            status,
            margin: lhs - rhs,
            note: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakingBracket {
    pub t_lower: f64,
    pub t_upper: f64,
}

impl BreakingBracket {
    pub fn contains(&self, t: f64) -> bool {
        self.t_lower < t && t < self.t_upper
    }

    pub fn width(&self) -> f64 {
        self.t_upper - self.t_lower
    }
}

/// `(-1/((1+ε) m₀), -1/((1-ε)² m₀))`.
pub fn blowup_bracket(m0: f64, epsilon: f64) -> Result<BreakingBracket> {
    if !(m0 < 0.0) {
        return Err(Error::Domain(format!("bracket needs m0 < 0, got {m0}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(BreakingBracket {
        t_lower: -1.0 / ((1.0 + epsilon) * m0),
        t_upper: -1.0 / ((1.0 - epsilon).powi(2) * m0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub params: HypothesisParams,
    pub m0: f64,
    pub h3_norm: f64,
    pub conditions: Vec<ConditionRecord>,
    /// `ε < 1/52`; required for `overall`.
    pub admissible_epsilon: bool,
    pub overall: bool,
    pub bracket: Option<BreakingBracket>,
}

impl HypothesisReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.name == name)
    }

    fn finish(params: HypothesisParams, m0: f64, h3_norm: f64, conditions: Vec<ConditionRecord>) -> Self {
        let admissible_epsilon = params.admissible();
        let overall = admissible_epsilon && conditions.iter().all(|c| c.pass);
        let bracket = if overall {
            blowup_bracket(m0, params.epsilon).ok()
        } else {
            None
        };
        Self {
            params,
            m0,
            h3_norm,
            conditions,
            admissible_epsilon,
            overall,
            bracket,
        }
    }
}

/// `28 (1 + (1 + e² + e^{1/g}) g + g²)`.
pub fn c5_rhs(g: f64) -> f64 {
    28.0 * (1.0 + (1.0 + E * E + (1.0 / g).exp()) * g + g * g)
}

pub fn c5_lhs(epsilon: f64, m0: f64) -> f64 {
    epsilon * epsilon * (1.0 - epsilon).powi(4) * (-m0).max(0.0).powf(0.75)
}

pub fn d8_lhs(epsilon: f64, m0: f64) -> f64 {
    epsilon * epsilon * (-m0).max(0.0).powf(0.25)
}

pub fn d8_rhs() -> f64 {
    2.25 * E
}

fn common_conditions(epsilon: f64, g: f64, m0: f64, h3: f64, h3_resolved: bool, slope_resolved: bool) -> Vec<ConditionRecord> {
    vec![
        ConditionRecord::strict("a1", epsilon * epsilon * m0 * m0, 1.0 + 2.0 * h3, h3_resolved),
        ConditionRecord::strict("c5", c5_lhs(epsilon, m0), c5_rhs(g), slope_resolved),
        ConditionRecord::strict("d8", d8_lhs(epsilon, m0), d8_rhs(), slope_resolved),
    ]
}

/// `log10` of the allowed growth `((n-1) g)^{2(n-1)}`.
fn b3_allowance_log10(n: u32, g: f64) -> f64 {
    2.0 * (n - 1) as f64 * ((n - 1) as f64 * g).log10()
}

/// `b3` as a slack: `min_n [log10 allowance(n) − log10 ‖u₀^{(n)}‖_∞] ≥ 0`.
fn b3_record(slacks: &[(u32, f64, bool)], tail: Option<Result<f64>>) -> ConditionRecord {
    let mut worst = f64::INFINITY;
    let mut worst_n = 0;
    let mut resolved = true;
    for &(n, s, r) in slacks {
        resolved &= r;
        if s < worst {
            worst = s;
            worst_n = n;
        }
    }
    let mut note = format!("worst n = {worst_n}");
    if let Some(t) = &tail {
        match t {
            Ok(s) => {
                note.push_str(&format!("; all n > n_max covered with slack >= {s:.3}"));
                worst = worst.min(*s);
            }
            Err(e) => {
                note.push_str(&format!("; tail undecided: {e}"));
                resolved = false;
            }
        }
    }
    let status = if worst < 0.0 {
        ConditionStatus::Fail
    } else if !resolved {
        ConditionStatus::Indeterminate
    } else {
        ConditionStatus::Pass
    };
    ConditionRecord {
        name: "b3".into(),
        lhs: worst,
        rhs: 0.0,
        pass: status == ConditionStatus::Pass,
        status,
        margin: worst,
        note: Some(note),
    }
}

/// Checks the four conditions on grid data. Norms on the grid stand in for
/// norms on the line, so `u₀` should be negligible at `±L`.
pub fn check_hypotheses_grid<T: Real>(u0: &GridField<T>, epsilon: f64, g: f64, n_max: u32) -> Result<HypothesisReport> {
    validate_inputs(epsilon, g, n_max)?;
    let grid = SpectralGrid::for_field(u0)?;
    let m0 = min_slope(&grid, u0)?.m.to_f64_lossy();
    let ux = grid.derivative(u0, 1)?;
    let h3 = grid.sobolev_norm(u0, 3)?.to_f64_lossy();
    let params = HypothesisParams::new(
        epsilon,
        g,
        n_max,
        u0.sup_norm().to_f64_lossy(),
        ux.sup_norm().to_f64_lossy(),
        m0,
    )?;
    let resolved = |k: u32| monitors::derivative_resolved(&grid, u0, k);
    let mut conditions = common_conditions(epsilon, g, m0, h3, resolved(3)?, resolved(1)?);
    let mut slacks = Vec::new();
    for n in 2..=n_max {
        let d = grid.derivative(u0, n)?.sup_norm().to_f64_lossy();
        slacks.push((n, b3_allowance_log10(n, g) - d.log10(), resolved(n)?));
    }
    conditions.push(b3_record(&slacks, None));
    Ok(HypothesisReport::finish(params, m0, h3, conditions))
}

/// Slack of `b3` for every `n > n_max` of a scaled family.
///
/// With `Rₙ = bound(n) / allowance(n)` and Cramér's bound,
/// `R_{n+1}/Rₙ ≤ √(2(n+2)) / (λ g² n²)`, so if this is `≤ 1` at
/// `n = n_max + 1` (it decreases in `n`), `R_{n_max+1} ≤ 1` settles all
/// larger `n`.
fn family_b3_tail(fam: &ScaledFamily, g: f64, n_max: u32) -> Result<f64> {
    let n = n_max + 1;
    let step = (2.0 * (n as f64 + 2.0)).sqrt() / (fam.width * g * g * (n as f64).powi(2));
    if step > 1.0 {
        return Err(Error::Domain(format!(
            "ratio bound {step:.3e} > 1 at n = {n}; raise n_max"
        )));
    }
    let ln_bound = fam.amplitude.ln() - n as f64 * fam.width.ln() + fam.profile.sup_norm_bound_ln(n);
    Ok(b3_allowance_log10(n, g) - ln_bound / std::f64::consts::LN_10)
}

/// Checks the four conditions on a scaled family via scaling laws.
pub fn check_hypotheses_family(fam: &ScaledFamily, epsilon: f64, g: f64, n_max: u32) -> Result<HypothesisReport> {
    validate_inputs(epsilon, g, n_max)?;
    if n_max > family::MAX_TABULATED {
        return Err(Error::InvalidArgument(format!(
            "n_max must be <= {} for scaled families",
            family::MAX_TABULATED
        )));
    }
    let m0 = fam.min_slope();
    let h3 = fam.h3_norm();
    let params = HypothesisParams::new(epsilon, g, n_max, fam.sup_norm(0), fam.sup_norm(1), m0)?;
    let mut conditions = common_conditions(epsilon, g, m0, h3, true, true);
    let slacks: Vec<(u32, f64, bool)> = (2..=n_max)
        .map(|n| {
            let ln = fam.sup_norm_ln(n);
            (n, b3_allowance_log10(n, g) - ln / std::f64::consts::LN_10, true)
        })
        .collect();
    conditions.push(b3_record(&slacks, Some(family_b3_tail(fam, g, n_max))));
    Ok(HypothesisReport::finish(params, m0, h3, conditions))
}

/// Initial data accepted by [`check_hypotheses`].
#[derive(Clone, Copy, Debug)]
pub enum InitialData<'a, T: Real> {
    Grid(&'a GridField<T>),
    Family(&'a ScaledFamily),
}

pub fn check_hypotheses<T: Real>(u0: InitialData<'_, T>, epsilon: f64, g: f64, n_max: u32) -> Result<HypothesisReport> {
    match u0 {
        InitialData::Grid(f) => check_hypotheses_grid(f, epsilon, g, n_max),
        InitialData::Family(f) => check_hypotheses_family(f, epsilon, g, n_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_examples() {
        let b = blowup_bracket(-100.0, 0.1).unwrap();
        assert!((b.t_lower - 1.0 / 110.0).abs() < 1e-17);
        assert!((b.t_upper - 1.0 / 81.0).abs() < 1e-17);
        let b = blowup_bracket(-1.0, 0.5).unwrap();
        assert!((b.t_lower - 2.0 / 3.0).abs() < 1e-15 && (b.t_upper - 4.0).abs() < 1e-15);
        let b = blowup_bracket(-4.0, 1e-9).unwrap();
        assert!(b.width() < 1e-8 && (b.t_lower - 0.25).abs() < 1e-9);
        assert!(blowup_bracket(0.0, 0.1).is_err());
        assert!(blowup_bracket(-1.0, 1.0).is_err());
    }

    #[test]
    fn zero_data_fails_a1() {
        let z = GridField::<f64>::zeros(20.0, 256).unwrap();
        let r = check_hypotheses(InitialData::Grid(&z), 0.01, 1.0, 4).unwrap();
        let a1 = r.condition("a1").unwrap();
        assert_eq!(a1.lhs, 0.0);
        assert_eq!(a1.rhs, 1.0);
        assert!(!a1.pass && !r.overall && r.bracket.is_none());
    }

    #[test]
    fn grid_example_fails_c5() {
        let u = GridField::from_fn(20.0, 2048, |x: f64| -200.0 * x * (-x * x).exp()).unwrap();
        let r = check_hypotheses(InitialData::Grid(&u), 0.1, 1.0, DEFAULT_N_MAX).unwrap();
        let c5 = r.condition("c5").unwrap();
        let lhs = 0.01 * 0.9_f64.powi(4) * 200.0_f64.powf(0.75);
        assert!((c5.lhs - lhs).abs() < 1e-9 * lhs);
        assert!((c5.rhs - 28.0 * (3.0 + E * E + E)).abs() < 1e-9 * c5.rhs);
        assert!(!c5.pass);
        assert!(!r.admissible_epsilon);
    }

    #[test]
    fn params_constants() {
        let p = HypothesisParams::new(0.01, 1.0, 8, 2.0, 3.0, -16.0).unwrap();
        assert_eq!((p.c0, p.c1, p.c2), (10.0, 6.0, 8.0));
        assert!((p.sigma - 1.56).abs() < 1e-15);
        assert!(p.admissible());
        assert!(!HypothesisParams::new(1.0 / 52.0, 1.0, 8, 0.0, 0.0, -1.0).unwrap().admissible());
        assert!(HypothesisParams::new(0.6, 1.0, 8, 0.0, 0.0, -1.0).is_err());
        assert!(HypothesisParams::new(0.01, 0.5, 8, 0.0, 0.0, -1.0).is_err());
    }
}
