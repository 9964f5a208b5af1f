use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kmwave"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn sweep_rows(o: &Output) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    r.records().map(|x| x.unwrap()).collect()
}

const SMALL: &str = r#"
[initial_data]
kind = "neg_x_gaussian"
amplitude = 1e-3

[grid]
half_length = 20.0
n_points = 256

[time]
t_end = 0.5
"#;

#[test]
fn run_reports_defaults_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["classification"], "completed");
    let defaults = v["defaults_applied"].as_object().unwrap();
    assert!(defaults.contains_key("time.cfl"));
    assert!(defaults.contains_key("monitors.g5.epsilon"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.toml", &format!("bogus = 1\n{SMALL}"));
    let missing = write(dir.path(), "missing.toml", "[grid]\nhalf_length = 1.0\nn_points = 64\n");
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("n_points = 256", "n_points = 255"));
    for cfg in [&unknown, &missing, &bad, &dir.path().join("absent.toml")] {
        for sub in ["run", "check"] {
            let o = bin().arg(sub).arg(cfg).output().unwrap();
            assert_eq!(o.status.code(), Some(2), "{sub} {}", cfg.display());
        }
    }
    let o = bin().arg("run").arg(&unknown).output().unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn check_on_family_config() {
    let o = bin().arg("check").arg(configs().join("family_check.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let conds = v["conditions"].as_array().unwrap();
    assert!(conds.iter().all(|c| c["pass"] == true), "{v}");
}

#[test]
fn stirling_and_calibrate() {
    let o = bin().args(["stirling", "--to", "40"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all hold: true"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.json");
    let o = bin().args(["calibrate", "--n-points", "512", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    for r in v.as_array().unwrap() {
        assert!((r["c"].as_f64().unwrap() - 5.013256549262001).abs() < 1e-6);
    }
}

#[test]
fn empty_sweep_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = bin()
        .arg("sweep")
        .arg(&cfg)
        .args(["--axis", "initial_data.amplitude", "--values"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn sweep_bracket_width_grows_with_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.toml", &SMALL.replace("1e-3", "50.0").replace("0.5", "0.05"));
    let o = bin()
        .env("KMWAVE_WORKERS", "2")
        .arg("sweep")
        .arg(&cfg)
        .args(["--axis", "monitors.g5.epsilon", "--values", "0.15", "0.05", "0.1"])
        .output()
        .unwrap();
    let rows = sweep_rows(&o);
    assert_eq!(rows.len(), 3);
    let widths: Vec<f64> = rows
        .iter()
        .map(|r| r[3].parse::<f64>().unwrap() - r[2].parse::<f64>().unwrap())
        .collect();
    assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
}

#[test]
fn sweep_breaking_time_falls_with_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n_points = 256", "n_points = 2048").replace("0.5", "0.1");
    let cfg = write(dir.path(), "b.toml", &text);
    let o = bin()
        .env("KMWAVE_WORKERS", "3")
        .arg("sweep")
        .arg(&cfg)
        .args(["--axis", "initial_data.amplitude", "--values", "100", "25", "50"])
        .output()
        .unwrap();
    let rows = sweep_rows(&o);
    let t: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(t[0] > t[1] && t[1] > t[2], "{t:?}");
    assert!(rows.iter().all(|r| &r[4] == "true"));
}

#[test]
fn bad_worker_count_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = bin()
        .env("KMWAVE_WORKERS", "zero")
        .arg("sweep")
        .arg(&cfg)
        .args(["--axis", "initial_data.amplitude", "--values", "1e-3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
