use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use kmwave::certificates::verify_stirling_lemma;
use kmwave::{calibrate, KernelKind};
use kmwave_cli::run::{EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use kmwave_cli::sweep::{parse_axis_value, render_sweep_csv, thread_pool, worker_count};
use kmwave_cli::{load_config, run_certificates, run_scenario, sweep, RunError};

#[derive(Parser)]
#[command(name = "kmwave", version, about = "Wave-breaking experiments for a nonlocal dispersive-dissipative model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its diagnostics.
    Run { config: PathBuf },
    /// Evaluate the hypothesis certificates only.
    Check { config: PathBuf },
    /// Fit the kernel normalization against the quadrature oracle.
    Calibrate {
        #[arg(long, default_value_t = 20.0)]
        half_length: f64,
        #[arg(long, default_value_t = 1024)]
        n_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the factorial inequality exactly for n = 3..=N.
    Stirling {
        #[arg(long)]
        to: u32,
        #[arg(long, default_value_t = 3)]
        from: u32,
    },
    /// Run a scenario for each value of one config field.
    Sweep {
        config: PathBuf,
        /// Dotted field path, e.g. `initial_data.amplitude`.
        #[arg(long)]
        axis: String,
        #[arg(long, num_args = 0.., allow_hyphen_values = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fail(code: i32, err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    code
}

fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            match run_scenario(&cfg) {
                Ok(a) => {
                    let r = &a.report;
                    let summary = serde_json::json!({
                        "classification": r.classification,
                        "t_est": r.t_est(),
                        "bracket": r.bracket,
                        "verdict": r.verdict,
                        "error": r.error,
                        "defaults_applied": r.defaults_applied,
                    });
                    println!("{summary}");
                    if let Some(e) = &r.error {
                        eprintln!("error: {e}");
                    }
                    a.exit_code()
                }
                Err(e) => fail(e.exit_code(), e),
            }
        }
        Command::Check { config } => {
            let result = load_config(&config).map_err(RunError::from).and_then(|c| run_certificates(&c));
            match result {
                Ok(r) => {
                    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                    EXIT_OK
                }
                Err(e) => fail(e.exit_code(), e),
            }
        }
        Command::Calibrate {
            half_length,
            n_points,
            out,
        } => {
            let records: Result<Vec<_>, _> = KernelKind::ALL
                .iter()
                .map(|&k| calibrate(k, half_length, n_points))
                .collect();
            match records {
                Ok(r) => {
                    let text = serde_json::to_string_pretty(&r).expect("records serialize") + "\n";
                    match emit(out.as_deref(), &text) {
                        Ok(()) => EXIT_OK,
                        Err(e) => fail(EXIT_NUMERICAL, e),
                    }
                }
                Err(e) => fail(EXIT_NUMERICAL, e),
            }
        }
        Command::Stirling { to, from } => match verify_stirling_lemma(from, to) {
            Ok(r) => {
                for row in &r.rows {
                    println!("{:>4} {:.6e} {}", row.n, row.ratio, if row.holds { "ok" } else { "FAIL" });
                }
                println!("max ratio {:.6e}; all hold: {}", r.max_ratio, r.all_hold);
                if r.all_hold {
                    EXIT_OK
                } else {
                    EXIT_NUMERICAL
                }
            }
            Err(e) => fail(EXIT_CONFIG, e),
        },
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_CONFIG, format!("cannot read {}: {e}", config.display())),
            };
            let template: toml::Value = match toml::from_str(&text) {
                Ok(v) => v,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let workers = match worker_count() {
                Ok(w) => w,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let values: Vec<toml::Value> = values.iter().map(|s| parse_axis_value(s)).collect();
            let rows = sweep(&template, &axis, &values, &thread_pool(workers));
            if let Err(e) = emit(out.as_deref(), &render_sweep_csv(&rows)) {
                return fail(EXIT_NUMERICAL, e);
            }
            rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let code = dispatch(Cli::parse());
    ExitCode::from(code as u8)
}
