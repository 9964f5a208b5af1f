//! Parallel one-axis parameter sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{from_value, set_path, ConfigError};
use crate::run::{run_scenario, suffixed, Classification};

/// Environment variable holding the worker count for sweeps.
pub const WORKERS_ENV: &str = "KMWAVE_WORKERS";

/// Worker count from [`WORKERS_ENV`]; `None` means rayon's default.
pub fn worker_count() -> Result<Option<usize>, ConfigError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError::Invalid {
                field: WORKERS_ENV.into(),
                constraint: format!("must be a positive integer, got `{s}`"),
            }),
        },
    }
}

pub fn thread_pool(workers: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    b.build().expect("thread pool")
}

/// Reads a command-line value as a TOML literal, falling back to a string.
pub fn parse_axis_value(s: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}

fn display(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub t_est: Option<f64>,
    pub bracket_lower: Option<f64>,
    pub bracket_upper: Option<f64>,
    pub in_bracket: Option<bool>,
    pub monitors_held: Option<bool>,
    pub classification: Option<Classification>,
    pub exit_code: i32,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn bracket_width(&self) -> Option<f64> {
        Some(self.bracket_upper? - self.bracket_lower?)
    }
}

fn order(values: &[toml::Value]) -> Vec<toml::Value> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| match (a.as_float().or(a.as_integer().map(|i| i as f64)), b.as_float().or(b.as_integer().map(|i| i as f64))) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => display(a).cmp(&display(b)),
    });
    v
}

fn per_scenario_paths(value: &mut toml::Value, index: usize) {
    let Some(outputs) = value.get_mut("outputs").and_then(|o| o.as_table_mut()) else {
        return;
    };
    for key in ["csv_path", "json_path", "svg_path"] {
        if let Some(toml::Value::String(p)) = outputs.get(key) {
            let new = suffixed(p, &index.to_string()).display().to_string();
            outputs.insert(key.into(), toml::Value::String(new));
        }
    }
}

fn run_one(template: &toml::Value, axis: &str, value: &toml::Value, index: usize) -> SweepRow {
    let mut row = SweepRow {
        value: display(value),
        t_est: None,
        bracket_lower: None,
        bracket_upper: None,
        in_bracket: None,
        monitors_held: None,
        classification: None,
        exit_code: 0,
        error: None,
    };
    let mut tree = template.clone();
    let result = set_path(&mut tree, axis, value.clone())
        .and_then(|_| {
            per_scenario_paths(&mut tree, index);
            from_value(tree)
        })
        .map_err(crate::run::RunError::from)
        .and_then(|cfg| run_scenario(&cfg));
    match result {
        Ok(a) => {
            let r = &a.report;
            row.t_est = r.t_est();
            row.bracket_lower = r.bracket.map(|b| b.t_lower);
            row.bracket_upper = r.bracket.map(|b| b.t_upper);
            row.in_bracket = r.verdict.in_bracket;
            row.monitors_held = r.trajectory.as_ref().map(|t| t.monitors_held());
            row.classification = Some(r.classification);
            row.exit_code = r.exit_code();
            row.error = r.error.clone();
        }
        Err(e) => {
            row.exit_code = e.exit_code();
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Runs the template once per axis value on `pool`. Rows are ordered by
/// axis value; failures are recorded per row.
pub fn sweep(template: &toml::Value, axis: &str, values: &[toml::Value], pool: &rayon::ThreadPool) -> Vec<SweepRow> {
    let ordered = order(values);
    pool.install(|| {
        ordered
            .par_iter()
            .enumerate()
            .map(|(i, v)| run_one(template, axis, v, i))
            .collect()
    })
}

pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "value",
        "t_est",
        "bracket_lower",
        "bracket_upper",
        "in_bracket",
        "monitors_held",
        "classification",
        "error",
    ])
    .expect("in-memory write");
    let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    let b = |v: Option<bool>| v.map_or(String::new(), |x| x.to_string());
    for r in rows {
        let class = r
            .classification
            .map(|c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .unwrap_or_default();
        w.write_record([
            r.value.clone(),
            f(r.t_est),
            f(r.bracket_lower),
            f(r.bracket_upper),
            b(r.in_bracket),
            b(r.monitors_held),
            class,
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
