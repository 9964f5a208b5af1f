//! Scenario execution and artifact writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kmwave::certificates::{blowup_bracket, check_hypotheses_family, check_hypotheses_grid, BreakingBracket, HypothesisReport};
use kmwave::evolution::{detect_breaking, integrate, BreakingReport, BreakingVerdict, Sample, SolverState, Termination, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{CertificateSource, ConfigError, ScenarioConfig, SCHEMA_VERSION};
use crate::plot::{emit_plot, PlotError, PlotOptions, Series};

/// Tolerance on increases of `q(t)` between reliable samples.
pub const Q_MONOTONE_TOL: f64 = 1e-9;

pub const CSV_COLUMNS: [&str; 10] = [
    "t",
    "m",
    "q",
    "argmin_x",
    "mass",
    "l2_norm",
    "dt",
    "g5_ok",
    "b7_ok",
    "riccati_residual",
];

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] kmwave::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Plot(#[from] PlotError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Completed,
    BreakingDetected,
    ResolutionExhausted,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingSummary {
    pub holds: bool,
    pub strict_violations: usize,
    pub ambiguous_events: usize,
    pub snapshots: usize,
    pub labels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub termination: Termination,
    pub steps: u64,
    pub samples: usize,
    pub t_final: f64,
    pub m0: f64,
    pub m_final: f64,
    pub last_reliable_time: f64,
    pub resolution_warning: bool,
    pub near_breaking: bool,
    pub slope_anomaly: bool,
    pub projection_defect: f64,
    pub max_mass_drift: f64,
    pub max_l2_growth: f64,
    pub max_q_increase: f64,
    pub g5_held: Option<bool>,
    pub b7_held: Option<bool>,
    pub q_monotone: Option<bool>,
    pub nesting: Option<NestingSummary>,
    pub particles_unresolved: bool,
}

impl TrajectorySummary {
    fn new(tr: &Trajectory<f64>, cfg: &ScenarioConfig) -> Self {
        let last = tr.samples.last().expect("trajectory has samples");
        let q_inc = tr.max_q_increase();
        Self {
            termination: tr.termination,
            steps: tr.steps,
            samples: tr.samples.len(),
            t_final: last.t,
            m0: tr.m0,
            m_final: last.m,
            last_reliable_time: tr.last_reliable_time,
            resolution_warning: tr.resolution_warning,
            near_breaking: tr.near_breaking,
            slope_anomaly: tr.slope_anomaly,
            projection_defect: tr.projection_defect,
            max_mass_drift: tr.max_mass_drift(),
            max_l2_growth: finite_or_zero(tr.max_l2_growth()),
            max_q_increase: finite_or_zero(q_inc),
            g5_held: cfg.monitors.g5.enabled.then(|| tr.g5_held()),
            b7_held: cfg.monitors.b7.enabled.then(|| tr.b7_held()),
            q_monotone: (cfg.monitors.q_monotone && tr.m0 < 0.0).then_some(!(q_inc > Q_MONOTONE_TOL)),
            nesting: tr.nesting.as_ref().map(|n| NestingSummary {
                holds: n.holds(),
                strict_violations: n.strict_violations.len(),
                ambiguous_events: n.ambiguous_events,
                snapshots: n.snapshots,
                labels: n.labels,
            }),
            particles_unresolved: tr.particles_unresolved,
        }
    }

    /// All enabled monitors held.
    pub fn monitors_held(&self) -> bool {
        self.g5_held != Some(false)
            && self.b7_held != Some(false)
            && self.q_monotone != Some(false)
            && self.nesting.as_ref().is_none_or(|n| n.holds)
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub bracket_checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
    pub premise_held: Option<bool>,
    pub in_bracket: Option<bool>,
    /// Premise held throughout but the estimate missed the bracket.
    pub acceptance_violation: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub svg: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub classification: Classification,
    pub config: ScenarioConfig,
    pub defaults_applied: BTreeMap<String, Value>,
    pub hypotheses: Option<HypothesisReport>,
    pub trajectory: Option<TrajectorySummary>,
    pub breaking: Option<BreakingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breaking_note: Option<String>,
    pub bracket: Option<BreakingBracket>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: ArtifactPaths,
}

impl RunReport {
    pub fn t_est(&self) -> Option<f64> {
        self.breaking.and_then(|b| b.t_est)
    }

    pub fn exit_code(&self) -> i32 {
        if self.classification == Classification::Error {
            EXIT_NUMERICAL
        } else if self.verdict.acceptance_violation {
            EXIT_ACCEPTANCE
        } else {
            EXIT_OK
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub csv: String,
    pub trajectory: Option<Trajectory<f64>>,
}

impl RunArtifacts {
    pub fn classification(&self) -> Classification {
        self.report.classification
    }

    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }
}

/// Runs the hypothesis checker configured in `cfg`.
pub fn run_certificates(cfg: &ScenarioConfig) -> Result<HypothesisReport, RunError> {
    let c = &cfg.certificates;
    let report = match c.source {
        CertificateSource::Grid => {
            let u0 = cfg.initial_data.field(&cfg.grid)?;
            check_hypotheses_grid(&u0, c.epsilon, c.g, c.n_max)?
        }
        CertificateSource::Family => {
            let fam = cfg.initial_data.family().ok_or_else(|| ConfigError::Invalid {
                field: "certificates.source".into(),
                constraint: "profile has no closed-form family".into(),
            })?;
            check_hypotheses_family(&fam, c.epsilon, c.g, c.n_max)?
        }
    };
    Ok(report)
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

fn fmt_b(v: Option<bool>) -> String {
    v.map_or(String::new(), |b| b.to_string())
}

/// Renders the per-sample time series.
pub fn render_csv(samples: &[Sample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for s in samples {
        w.write_record([
            fmt_f(s.t),
            fmt_f(s.m),
            fmt_f(s.q),
            fmt_f(s.argmin_x),
            fmt_f(s.mass),
            fmt_f(s.l2_norm),
            fmt_f(s.dt),
            fmt_b(s.g5_ok),
            fmt_b(s.b7_ok),
            s.riccati_residual.map_or(String::new(), fmt_f),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `dir/name.svg` becomes `dir/name_{suffix}.svg`.
pub fn suffixed(path: &str, suffix: &str) -> PathBuf {
    let p = Path::new(path);
    let stem = p.file_stem().map_or_else(|| "plot".into(), |s| s.to_string_lossy().into_owned());
    let ext = p.extension().map_or_else(String::new, |e| format!(".{}", e.to_string_lossy()));
    p.with_file_name(format!("{stem}_{suffix}{ext}"))
}

fn classify(tr: &Trajectory<f64>, breaking: Option<&BreakingReport>) -> Classification {
    if tr.termination == Termination::ResolutionExhausted {
        Classification::ResolutionExhausted
    } else if tr.termination.by_breaking() || breaking.is_some_and(|b| b.verdict == BreakingVerdict::Breaking) {
        Classification::BreakingDetected
    } else {
        Classification::Completed
    }
}

/// Builds the initial field, runs certificates and the integration, and
/// writes every configured artifact.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunArtifacts, RunError> {
    let u0 = cfg.initial_data.field(&cfg.grid)?;
    let hypotheses = if cfg.certificates.enabled {
        Some(run_certificates(cfg)?)
    } else {
        None
    };
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        classification: Classification::Completed,
        config: cfg.clone(),
        defaults_applied: cfg.defaults_applied.clone(),
        hypotheses,
        trajectory: None,
        breaking: None,
        breaking_note: None,
        bracket: None,
        verdict: Verdict::default(),
        error: None,
        artifacts: ArtifactPaths {
            csv: cfg.outputs.csv_path.clone(),
            json: cfg.outputs.json_path.clone(),
            svg: Vec::new(),
        },
    };

    let state = SolverState::new(u0, cfg.time.dt_max)?;
    let outcome = integrate(state, &cfg.equation, cfg.time.t_end, &cfg.step_control(), &cfg.monitor_set());
    let tr = match outcome {
        Ok(tr) => tr,
        Err(e) => {
            report.classification = Classification::Error;
            report.error = Some(e.to_string());
            let csv = render_csv(&[]);
            write_outputs(cfg, &mut report, &csv, None)?;
            return Ok(RunArtifacts {
                report,
                csv,
                trajectory: None,
            });
        }
    };

    let summary = TrajectorySummary::new(&tr, cfg);
    if tr.m0 < 0.0 {
        match detect_breaking(&tr) {
            Ok(b) => report.breaking = Some(b),
            Err(e) => report.breaking_note = Some(e.to_string()),
        }
    } else {
        report.breaking_note = Some("initial slope minimum is not negative".into());
    }
    report.classification = classify(&tr, report.breaking.as_ref());
    report.verdict = verdict(cfg, &tr, report.breaking.as_ref(), &mut report.bracket);
    report.trajectory = Some(summary);

    let csv = render_csv(&tr.samples);
    write_outputs(cfg, &mut report, &csv, Some(&tr))?;
    Ok(RunArtifacts {
        report,
        csv,
        trajectory: Some(tr),
    })
}

fn verdict(
    cfg: &ScenarioConfig,
    tr: &Trajectory<f64>,
    breaking: Option<&BreakingReport>,
    bracket_out: &mut Option<BreakingBracket>,
) -> Verdict {
    let skip = |reason: &str| Verdict {
        skip_reason: Some(reason.to_string()),
        ..Verdict::default()
    };
    if !cfg.equation.is_canonical() {
        return skip("equation is outside the canonical model; no bracket applies");
    }
    if !cfg.monitors.g5.enabled {
        return skip("g5 monitor disabled");
    }
    let Ok(bracket) = blowup_bracket(tr.m0, cfg.monitors.g5.epsilon) else {
        return skip("initial slope minimum is not negative");
    };
    *bracket_out = Some(bracket);
    let Some(t_est) = breaking.filter(|b| b.verdict == BreakingVerdict::Breaking).and_then(|b| b.t_est) else {
        return skip("no breaking detected");
    };
    let premise_held = tr.g5_held();
    let in_bracket = bracket.contains(t_est);
    Verdict {
        bracket_checked: true,
        skip_reason: None,
        premise_held: Some(premise_held),
        in_bracket: Some(in_bracket),
        acceptance_violation: premise_held && !in_bracket,
    }
}

fn write_outputs(cfg: &ScenarioConfig, report: &mut RunReport, csv: &str, tr: Option<&Trajectory<f64>>) -> Result<(), RunError> {
    if let Some(p) = &cfg.outputs.csv_path {
        write_file(Path::new(p), csv)?;
    }
    if let (Some(svg), Some(tr)) = (&cfg.outputs.svg_path, tr) {
        report.artifacts.svg = write_plots(svg, tr, report.bracket)?
            .into_iter()
            .map(|p| p.display().to_string())
            .collect();
    }
    if let Some(p) = &cfg.outputs.json_path {
        let text = serde_json::to_string_pretty(report).expect("report serializes");
        write_file(Path::new(p), &text)?;
    }
    Ok(())
}

fn write_plots(svg: &str, tr: &Trajectory<f64>, bracket: Option<BreakingBracket>) -> Result<Vec<PathBuf>, RunError> {
    if let Some(dir) = Path::new(svg).parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let t: Vec<f64> = tr.samples.iter().map(|s| s.t).collect();
    let m: Vec<f64> = tr.samples.iter().map(|s| s.m).collect();
    let mut written = Vec::new();

    let path = suffixed(svg, "m");
    emit_plot(
        &[Series::new("m(t)", t.clone(), m)],
        &PlotOptions {
            title: "minimum slope".into(),
            x_label: "t".into(),
            y_label: "m(t)".into(),
            ..Default::default()
        },
        &path,
    )?;
    written.push(path);

    let neg: Vec<&Sample> = tr.samples.iter().filter(|s| s.m < 0.0).collect();
    if !neg.is_empty() {
        let path = suffixed(svg, "inv_m");
        emit_plot(
            &[Series::new(
                "-1/m(t)",
                neg.iter().map(|s| s.t).collect(),
                neg.iter().map(|s| -1.0 / s.m).collect(),
            )],
            &PlotOptions {
                title: "-1/m(t) with breaking bracket".into(),
                x_label: "t".into(),
                y_label: "-1/m(t)".into(),
                band: bracket.map(|b| (b.t_lower, b.t_upper)),
                zero_line: true,
            },
            &path,
        )?;
        written.push(path);
    }

    let u = &tr.final_state.u;
    let path = suffixed(svg, "profile");
    emit_plot(
        &[Series::new(format!("u(x, {:.4})", tr.final_state.t), u.nodes(), u.values().to_vec())],
        &PlotOptions {
            title: "final profile".into(),
            x_label: "x".into(),
            y_label: "u".into(),
            ..Default::default()
        },
        &path,
    )?;
    written.push(path);
    Ok(written)
}
