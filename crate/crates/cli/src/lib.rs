//! Scenario runner for Hamilton-Killing flow experiments.
//!
//! A scenario is a JSON file naming a dimension, metric parameters, a
//! Hamiltonian, an initial state, integrator settings and a list of checks.
//! Running it writes a trajectory CSV and a JSON report; see [`run_scenario`].

pub mod checks;
pub mod config;
pub mod error;
pub mod run;

pub use checks::{CheckKind, CheckRequest};
pub use config::{validate_config, Scenario, ScenarioConfig, SCHEMA_VERSION};
pub use error::{exit, CliError, Result};
pub use run::{config_hash, emit_report, run_batch, run_file, run_scenario, trajectory_csv, ReportMeta, RunOptions, RunOutcome};
