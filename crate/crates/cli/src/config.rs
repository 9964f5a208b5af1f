//! Scenario configuration: TOML parsing, defaulting and validation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use kmwave::certificates::family::{BaseProfile, ScaledFamily};
use kmwave::evolution::{B7Policy, DeltaPolicy, MonitorSet, StepControl};
use kmwave::{EquationSpec, Field64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest admissible certificate `ε`.
pub const EPSILON_CAP: f64 = 1.0 / 52.0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("invalid `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    GaussianBump,
    NegXGaussian,
    Sine,
    CustomSamples,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub width: f64,
    pub phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl InitialData {
    /// Profile value at `x`; `custom_samples` has no closed form.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (a, w, p) = (self.amplitude, self.width, self.phase);
        match self.kind {
            ProfileKind::GaussianBump => Some(a * (-((x - p) / w).powi(2)).exp()),
            ProfileKind::NegXGaussian => {
                let y = (x - p) / w;
                Some(-a * y * (-y * y).exp())
            }
            ProfileKind::Sine => Some(a * (x / w + p).sin()),
            ProfileKind::CustomSamples => None,
        }
    }

    pub fn field(&self, grid: &GridConfig) -> Result<Field64, ConfigError> {
        let built = match &self.samples {
            Some(s) => Field64::new(grid.half_length, s.clone()),
            None => Field64::from_fn(grid.half_length, grid.n_points, |x| self.eval(x).unwrap_or(f64::NAN)),
        };
        built.map_err(|e| invalid("initial_data", e.to_string()))
    }

    /// Analytic family `A f(x/λ)` matching this profile, when there is one.
    pub fn family(&self) -> Option<ScaledFamily> {
        let profile = match self.kind {
            ProfileKind::GaussianBump => BaseProfile::Gaussian,
            ProfileKind::NegXGaussian => BaseProfile::NegXGaussian,
            _ => return None,
        };
        ScaledFamily::new(profile, self.amplitude, self.width).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Half period `L`; the domain is `[-L, L)`.
    pub half_length: f64,
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub slope_safety: f64,
    pub sample_stride: usize,
    pub breaking_factor: f64,
    pub reliable_tail: f64,
    pub strict_resolution: bool,
    pub max_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G5Config {
    pub enabled: bool,
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicyKind {
    Balanced,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct B7Config {
    pub enabled: bool,
    pub n: u32,
    pub delta_policy: DeltaPolicyKind,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingConfig {
    pub enabled: bool,
    pub gamma: f64,
    pub labels: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub g5: G5Config,
    pub b7: B7Config,
    pub nesting: NestingConfig,
    pub q_monotone: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    /// Sampled initial field.
    Grid,
    /// Closed-form scaled family of the named profile.
    Family,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateConfig {
    pub enabled: bool,
    pub epsilon: f64,
    pub g: f64,
    pub n_max: u32,
    pub source: CertificateSource,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub csv_path: Option<String>,
    pub json_path: Option<String>,
    pub svg_path: Option<String>,
    pub snapshot_stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub equation: EquationSpec,
    pub initial_data: InitialData,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub monitors: MonitorConfig,
    pub certificates: CertificateConfig,
    pub outputs: OutputConfig,
    /// Every value filled in by default, keyed by dotted path.
    #[serde(default)]
    pub defaults_applied: BTreeMap<String, Value>,
}

impl ScenarioConfig {
    pub fn step_control(&self) -> StepControl {
        let t = &self.time;
        StepControl {
            cfl: t.cfl,
            dt_min: t.dt_min,
            dt_max: t.dt_max,
            slope_safety: t.slope_safety,
            sample_stride: t.sample_stride,
            breaking_factor: t.breaking_factor,
            reliable_tail: t.reliable_tail,
            strict_resolution: t.strict_resolution,
            max_steps: t.max_steps,
            snapshot_stride: self.outputs.snapshot_stride,
            ..StepControl::default()
        }
    }

    pub fn monitor_set(&self) -> MonitorSet {
        let m = &self.monitors;
        MonitorSet {
            g5_epsilon: m.g5.enabled.then_some(m.g5.epsilon),
            b7: m.b7.enabled.then_some(B7Policy {
                n: m.b7.n,
                delta: match m.b7.delta_policy {
                    DeltaPolicyKind::Balanced => DeltaPolicy::Balanced,
                    DeltaPolicyKind::Fixed => DeltaPolicy::Fixed(m.b7.delta),
                },
            }),
            nesting_gamma: m.nesting.enabled.then_some(m.nesting.gamma),
            q_monotone: m.q_monotone,
            n_labels: m.nesting.labels,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawEquation {
    alpha: Option<f64>,
    beta: Option<f64>,
    nu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawInitial {
    kind: Option<ProfileKind>,
    amplitude: Option<f64>,
    width: Option<f64>,
    phase: Option<f64>,
    samples: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
struct RawGrid {
    #[serde(alias = "L")]
    half_length: Option<f64>,
    n_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawTime {
    t_end: Option<f64>,
    cfl: Option<f64>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    slope_safety: Option<f64>,
    sample_stride: Option<usize>,
    breaking_factor: Option<f64>,
    reliable_tail: Option<f64>,
    strict_resolution: Option<bool>,
    max_steps: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawG5 {
    enabled: Option<bool>,
    epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawB7 {
    enabled: Option<bool>,
    n: Option<u32>,
    delta_policy: Option<DeltaPolicyKind>,
    delta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawNesting {
    enabled: Option<bool>,
    gamma: Option<f64>,
    labels: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawMonitors {
    #[serde(default)]
    g5: RawG5,
    #[serde(default)]
    b7: RawB7,
    #[serde(default)]
    nesting: RawNesting,
    q_monotone: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
struct RawCertificates {
    enabled: Option<bool>,
    epsilon: Option<f64>,
    g: Option<f64>,
    n_max: Option<u32>,
    source: Option<CertificateSource>,
}

#[derive(Debug, Default, Deserialize)]
struct RawOutputs {
    csv_path: Option<String>,
    json_path: Option<String>,
    svg_path: Option<String>,
    snapshot_stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    schema_version: Option<u32>,
    #[serde(default)]
    equation: RawEquation,
    #[serde(default, alias = "initial")]
    initial_data: RawInitial,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    monitors: RawMonitors,
    #[serde(default)]
    certificates: RawCertificates,
    #[serde(default)]
    outputs: RawOutputs,
}

struct Defaults(BTreeMap<String, Value>);

impl Defaults {
    fn or<T: Serialize>(&mut self, value: Option<T>, path: &str, default: T) -> T {
        value.unwrap_or_else(|| {
            self.0.insert(path.to_string(), serde_json::to_value(&default).unwrap_or(Value::Null));
            default
        })
    }
}

fn required<T>(value: Option<T>, path: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| invalid(path, "required"))
}

/// Parses TOML text into a validated configuration.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    from_value(value)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Builds a configuration from an already parsed TOML tree.
pub fn from_value(value: toml::Value) -> Result<ScenarioConfig, ConfigError> {
    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(value, |path| unknown.push(path.to_string()))
        .map_err(|e| ConfigError::Parse(e.to_string()))?;
    if !unknown.is_empty() {
        unknown.sort();
        return Err(ConfigError::UnknownKeys(unknown));
    }
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut d = Defaults(BTreeMap::new());
    let schema_version = d.or(raw.schema_version, "schema_version", SCHEMA_VERSION);
    if schema_version != SCHEMA_VERSION {
        return Err(invalid("schema_version", format!("must be {SCHEMA_VERSION}")));
    }

    let canonical = EquationSpec::canonical();
    let e = raw.equation;
    let (alpha, beta, nu) = (
        d.or(e.alpha, "equation.alpha", canonical.alpha),
        d.or(e.beta, "equation.beta", canonical.beta),
        d.or(e.nu, "equation.nu", canonical.nu),
    );
    let equation = EquationSpec::new(alpha, beta, nu).map_err(|err| invalid("equation", err.to_string()))?;

    let g = raw.grid;
    let grid = GridConfig {
        half_length: required(g.half_length, "grid.half_length")?,
        n_points: required(g.n_points, "grid.n_points")?,
    };
    if !(grid.half_length > 0.0 && grid.half_length.is_finite()) {
        return Err(invalid("grid.half_length", "must be positive and finite"));
    }
    if grid.n_points < 16 || !grid.n_points.is_power_of_two() {
        return Err(invalid("grid.n_points", "must be a power of two >= 16"));
    }

    let i = raw.initial_data;
    let kind = required(i.kind, "initial_data.kind")?;
    let initial_data = InitialData {
        kind,
        amplitude: d.or(i.amplitude, "initial_data.amplitude", 1.0),
        width: d.or(i.width, "initial_data.width", 1.0),
        phase: d.or(i.phase, "initial_data.phase", 0.0),
        samples: i.samples,
    };
    if !initial_data.amplitude.is_finite() {
        return Err(invalid("initial_data.amplitude", "must be finite"));
    }
    if !(initial_data.width > 0.0 && initial_data.width.is_finite()) {
        return Err(invalid("initial_data.width", "must be positive and finite"));
    }
    if !initial_data.phase.is_finite() {
        return Err(invalid("initial_data.phase", "must be finite"));
    }
    match (kind, &initial_data.samples) {
        (ProfileKind::CustomSamples, None) => return Err(invalid("initial_data.samples", "required for custom_samples")),
        (ProfileKind::CustomSamples, Some(s)) if s.len() != grid.n_points => {
            return Err(invalid(
                "initial_data.samples",
                format!("expected {} values, found {}", grid.n_points, s.len()),
            ))
        }
        (ProfileKind::CustomSamples, Some(s)) if s.iter().any(|v| !v.is_finite()) => {
            return Err(invalid("initial_data.samples", "values must be finite"))
        }
        (ProfileKind::CustomSamples, _) => {}
        (_, Some(_)) => return Err(invalid("initial_data.samples", "only allowed for custom_samples")),
        (_, None) => {}
    }
    if kind == ProfileKind::Sine {
        let periods = grid.half_length / (PI * initial_data.width);
        if (periods - periods.round()).abs() > 1e-9 || periods.round() < 1.0 {
            return Err(invalid(
                "initial_data.width",
                "sine must be periodic on the grid: half_length / (pi * width) must be a positive integer",
            ));
        }
    }

    let base = StepControl::default();
    let t = raw.time;
    let time = TimeConfig {
        t_end: required(t.t_end, "time.t_end")?,
        cfl: d.or(t.cfl, "time.cfl", base.cfl),
        dt_min: d.or(t.dt_min, "time.dt_min", base.dt_min),
        dt_max: d.or(t.dt_max, "time.dt_max", base.dt_max),
        slope_safety: d.or(t.slope_safety, "time.slope_safety", base.slope_safety),
        sample_stride: d.or(t.sample_stride, "time.sample_stride", base.sample_stride),
        breaking_factor: d.or(t.breaking_factor, "time.breaking_factor", base.breaking_factor),
        reliable_tail: d.or(t.reliable_tail, "time.reliable_tail", base.reliable_tail),
        strict_resolution: d.or(t.strict_resolution, "time.strict_resolution", base.strict_resolution),
        max_steps: d.or(t.max_steps, "time.max_steps", base.max_steps),
    };
    positive("time.t_end", time.t_end)?;
    if !(time.cfl > 0.0 && time.cfl <= 1.0) {
        return Err(invalid("time.cfl", "must lie in (0, 1]"));
    }
    positive("time.dt_min", time.dt_min)?;
    positive("time.dt_max", time.dt_max)?;
    if time.dt_max < time.dt_min {
        return Err(invalid("time.dt_max", "must be >= time.dt_min"));
    }
    positive("time.slope_safety", time.slope_safety)?;
    if time.sample_stride == 0 {
        return Err(invalid("time.sample_stride", "must be >= 1"));
    }
    if !(time.breaking_factor > 1.0 && time.breaking_factor.is_finite()) {
        return Err(invalid("time.breaking_factor", "must be > 1"));
    }
    positive("time.reliable_tail", time.reliable_tail)?;
    if time.max_steps == 0 {
        return Err(invalid("time.max_steps", "must be >= 1"));
    }

    let m = raw.monitors;
    let monitors = MonitorConfig {
        g5: G5Config {
            enabled: d.or(m.g5.enabled, "monitors.g5.enabled", true),
            epsilon: d.or(m.g5.epsilon, "monitors.g5.epsilon", 0.1),
        },
        b7: B7Config {
            enabled: d.or(m.b7.enabled, "monitors.b7.enabled", false),
            n: d.or(m.b7.n, "monitors.b7.n", 1),
            delta_policy: d.or(m.b7.delta_policy, "monitors.b7.delta_policy", DeltaPolicyKind::Balanced),
            delta: d.or(m.b7.delta, "monitors.b7.delta", 1.0),
        },
        nesting: NestingConfig {
            enabled: d.or(m.nesting.enabled, "monitors.nesting.enabled", false),
            gamma: d.or(m.nesting.gamma, "monitors.nesting.gamma", 1.0 / 3.0),
            labels: d.or(m.nesting.labels, "monitors.nesting.labels", 128),
        },
        q_monotone: d.or(m.q_monotone, "monitors.q_monotone", true),
    };
    if !(monitors.g5.epsilon > 0.0 && monitors.g5.epsilon < 1.0) {
        return Err(invalid("monitors.g5.epsilon", "must lie in (0, 1)"));
    }
    if monitors.b7.n == 0 {
        return Err(invalid("monitors.b7.n", "must be >= 1"));
    }
    positive("monitors.b7.delta", monitors.b7.delta)?;
    if !(monitors.nesting.gamma > 0.0 && monitors.nesting.gamma < 1.0) {
        return Err(invalid("monitors.nesting.gamma", "must lie in (0, 1)"));
    }
    if monitors.nesting.labels < 2 {
        return Err(invalid("monitors.nesting.labels", "must be >= 2"));
    }

    let c = raw.certificates;
    let certificates = CertificateConfig {
        enabled: d.or(c.enabled, "certificates.enabled", false),
        epsilon: d.or(c.epsilon, "certificates.epsilon", 0.015),
        g: d.or(c.g, "certificates.g", 1.0),
        n_max: d.or(c.n_max, "certificates.n_max", kmwave::certificates::DEFAULT_N_MAX),
        source: d.or(c.source, "certificates.source", CertificateSource::Grid),
    };
    if certificates.enabled {
        if !(certificates.epsilon > 0.0 && certificates.epsilon < EPSILON_CAP) {
            return Err(invalid("certificates.epsilon", "must lie in (0, 1/52)"));
        }
        if !(certificates.g >= 1.0 && certificates.g.is_finite()) {
            return Err(invalid("certificates.g", "must be >= 1"));
        }
        if !(2..=kmwave::certificates::family::MAX_TABULATED).contains(&certificates.n_max) {
            return Err(invalid("certificates.n_max", "must lie in [2, 40]"));
        }
        if certificates.source == CertificateSource::Family && initial_data.family().is_none() {
            return Err(invalid(
                "certificates.source",
                "family certificates need a gaussian_bump or neg_x_gaussian profile with amplitude > 0 and width >= 1",
            ));
        }
    }

    let o = raw.outputs;
    let outputs = OutputConfig {
        csv_path: o.csv_path,
        json_path: o.json_path,
        svg_path: o.svg_path,
        snapshot_stride: d.or(o.snapshot_stride, "outputs.snapshot_stride", 0),
    };

    Ok(ScenarioConfig {
        schema_version,
        equation,
        initial_data,
        grid,
        time,
        monitors,
        certificates,
        outputs,
        defaults_applied: d.0,
    })
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be positive"))
    }
}

/// Replaces the value at a dotted `path` in a TOML tree, creating tables as needed.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid("axis", format!("malformed path `{path}`")));
    }
    for (k, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| invalid("axis", format!("`{}` is not a table", parts[..k].join("."))))?;
        if k + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!()
}
