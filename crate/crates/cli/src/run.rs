use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hkflow_core::diagnostics::{ConvergenceTable, FlowClassification};
use hkflow_core::hilbert::to_complex;
use hkflow_core::{integrate_midpoint, CheckRecord, DiagnosticsReport, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::checks::evaluate;
use crate::config::{Scenario, ScenarioConfig};
use crate::error::{exit, CliError, Result};

pub const TOOL_NAME: &str = "hkflow";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory. Without it, relative output paths resolve against the
    /// config file's directory, or the working directory for in-memory configs.
    pub out_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario_id: String,
    pub trajectory_path: PathBuf,
    pub report_path: PathBuf,
    pub report: DiagnosticsReport,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass()
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            exit::OK
        } else {
            exit::CHECK_FAILED
        }
    }
}

/// Provenance recorded next to the checks in the report file.
#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub config_sha256: String,
    pub seed: u64,
    pub n: usize,
    pub h: f64,
    pub steps: usize,
    pub classification: Option<FlowClassification>,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    tool: &'static str,
    tool_version: &'static str,
    scenario_id: &'a str,
    config_sha256: &'a str,
    seed: u64,
    n: usize,
    h: f64,
    steps: usize,
    all_pass: bool,
    classification: Option<&'a FlowClassification>,
    checks: &'a [CheckRecord],
    convergence: Option<&'a ConvergenceTable>,
}

/// SHA-256 of the compact JSON serialization of the effective config.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Writes the report as pretty JSON. Field order is fixed by the document
/// struct, and nothing time- or host-dependent is included.
pub fn emit_report(report: &DiagnosticsReport, meta: &ReportMeta, path: &Path) -> Result<()> {
    let doc = ReportDocument {
        tool: TOOL_NAME,
        tool_version: TOOL_VERSION,
        scenario_id: &report.scenario_id,
        config_sha256: &meta.config_sha256,
        seed: meta.seed,
        n: meta.n,
        h: meta.h,
        steps: meta.steps,
        all_pass: report.all_pass(),
        classification: meta.classification.as_ref(),
        checks: &report.checks,
        convergence: report.convergence.as_ref(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn push_num(line: &mut String, x: f64) {
    // 17 significant digits round-trip every f64
    write!(line, ",{x:.16e}").expect("writing to a String");
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.points.first().map_or(0, |p| p.dim());
    let mut out = String::from("step,tau");
    for prefix in ["rho", "pi"] {
        for i in 1..=n {
            write!(out, ",{prefix}_{i}").unwrap();
        }
    }
    for i in 1..=n {
        write!(out, ",re_psi_{i},im_psi_{i}").unwrap();
    }
    out.push_str(",norm_defect,energy_defect\n");

    for (k, p) in traj.points.iter().enumerate() {
        let mut line = k.to_string();
        push_num(&mut line, traj.parameter_values[k]);
        p.rho().iter().chain(p.pi().iter()).for_each(|&x| push_num(&mut line, x));
        for z in to_complex(p).amplitudes().iter() {
            push_num(&mut line, z.re);
            push_num(&mut line, z.im);
        }
        push_num(&mut line, traj.norm_defects[k]);
        push_num(&mut line, traj.energy_defects[k]);
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// `--out` collects every output file by name; otherwise relative paths resolve
/// against `base`.
fn resolve(out_dir: Option<&Path>, base: Option<&Path>, file: &str) -> PathBuf {
    let file = Path::new(file);
    match (out_dir, base) {
        (Some(dir), _) => dir.join(file.file_name().unwrap_or(file.as_os_str())),
        (None, Some(dir)) if file.is_relative() => dir.join(file),
        _ => file.to_path_buf(),
    }
}

/// Integrates the scenario, evaluates its checks and writes the trajectory CSV
/// and report JSON. `base_dir` anchors relative output paths when no output
/// directory is given.
pub fn run_scenario(config: ScenarioConfig, options: &RunOptions, base_dir: Option<&Path>) -> Result<RunOutcome> {
    let mut config = config;
    if let Some(seed) = options.seed_override {
        config.seed = seed;
    }
    let scenario = Scenario::build(config)?;
    let traj = integrate_midpoint(&scenario.spec, &scenario.x0, scenario.h, scenario.steps)?;
    let evaluation = evaluate(&scenario, &traj)?;

    let config = &scenario.config;
    let mut report = DiagnosticsReport::new(config.id.clone());
    report.checks = evaluation.checks;
    report.convergence = evaluation.convergence;
    let meta = ReportMeta {
        config_sha256: config_hash(config),
        seed: config.seed,
        n: config.n,
        h: scenario.h,
        steps: scenario.steps,
        classification: evaluation.classification,
    };

    let out_dir = options.out_dir.as_deref();
    let trajectory_path = resolve(out_dir, base_dir, &config.trajectory_file());
    let report_path = resolve(out_dir, base_dir, &config.report_file());
    if trajectory_path == report_path {
        return Err(CliError::config("output.trajectory and output.report resolve to the same file"));
    }
    write_file(&trajectory_path, trajectory_csv(&traj).as_bytes())?;
    emit_report(&report, &meta, &report_path)?;
    Ok(RunOutcome { scenario_id: config.id.clone(), trajectory_path, report_path, report })
}

/// Loads `path` and runs it; outputs default to the config's directory.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunOutcome> {
    let config = ScenarioConfig::load(path)?;
    run_scenario(config, options, path.parent())
}

#[derive(Debug)]
pub struct BatchEntry {
    pub path: PathBuf,
    pub result: Result<RunOutcome>,
}

impl BatchEntry {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(outcome) => outcome.exit_code(),
            Err(e) => e.exit_code(),
        }
    }
}

/// Runs every `*.json` file in `dir` in parallel. Each scenario writes into its
/// own subdirectory named after the file stem, under `options.out_dir` if set.
pub fn run_batch(dir: &Path, options: &RunOptions) -> Result<Vec<BatchEntry>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let root = options.out_dir.clone().unwrap_or_else(|| dir.to_path_buf());
    Ok(files
        .into_par_iter()
        .map(|path| {
            let stem = path.file_stem().map(|s| s.to_owned()).unwrap_or_default();
            let opts = RunOptions { out_dir: Some(root.join(stem)), seed_override: options.seed_override };
            let result = run_file(&path, &opts);
            BatchEntry { path, result }
        })
        .collect())
}
