//! Scenario runner for the kmwave engine: configuration, diagnostics
//! output, SVG plots and parallel sweeps.

pub mod config;
pub mod plot;
pub mod run;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, ScenarioConfig};
pub use plot::{emit_plot, PlotOptions, Series};
pub use run::{run_certificates, run_scenario, Classification, RunArtifacts, RunError, RunReport};
pub use sweep::{sweep, SweepRow, WORKERS_ENV};
