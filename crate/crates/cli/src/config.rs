//! Scenario configuration: JSON schema, structural validation and conversion
//! into core types.

use std::fs;
use std::path::Path;

use hkflow_core::hilbert::from_complex;
use hkflow_core::{ComplexState, HamiltonianSpec, MetricParams, NonlinearTerm, PhasePoint};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::checks::{CheckKind, CheckRequest};
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub id: String,
    pub n: usize,
    #[serde(default)]
    pub metric_params: MetricParamsConfig,
    pub hamiltonian: HamiltonianConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricParamsConfig {
    #[serde(default)]
    pub a_coeffs: Vec<f64>,
    #[serde(default = "unit_b")]
    pub b_coeffs: Vec<f64>,
}

fn unit_b() -> Vec<f64> {
    vec![1.0]
}

impl Default for MetricParamsConfig {
    fn default() -> Self {
        Self { a_coeffs: Vec::new(), b_coeffs: unit_b() }
    }
}

/// Complex matrix as paired row-major real and imaginary parts. `im` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrixConfig {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexVectorConfig {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// Omitted kernel means the zero matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<ComplexMatrixConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_bra: Option<ComplexVectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_ket: Option<ComplexVectorConfig>,
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearTerm>,
}

/// Either `rho` and `pi`, or `psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<ComplexVectorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub h: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckEntry {
    Name(String),
    Detailed {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<bool>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

/// A validated scenario with its core objects built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: MetricParams,
    pub spec: HamiltonianSpec,
    pub x0: PhasePoint,
    pub h: f64,
    pub steps: usize,
    pub checks: Vec<CheckRequest>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn trajectory_file(&self) -> String {
        self.output.trajectory.clone().unwrap_or_else(|| format!("{}.trajectory.csv", self.id))
    }

    pub fn report_file(&self) -> String {
        self.output.report.clone().unwrap_or_else(|| format!("{}.report.json", self.id))
    }
}

/// Reads and validates a scenario file, collecting every field error.
pub fn validate_config(path: &Path) -> Result<ScenarioConfig> {
    let config = ScenarioConfig::load(path)?;
    Scenario::build(config).map(|s| s.config)
}

struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn dim(&mut self, field: &str, found: usize, n: usize) -> bool {
        if found != n {
            self.push(format!("dimension mismatch: {field} has length {found} but n = {n}"));
            return false;
        }
        true
    }

    fn finite(&mut self, field: &str, values: &[f64]) -> bool {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            self.push(format!("{field}[{i}] is not finite"));
            return false;
        }
        true
    }
}

fn complex_vector(p: &mut Problems, field: &str, v: &ComplexVectorConfig, n: usize) -> Option<DVector<Complex64>> {
    let mut ok = p.dim(&format!("{field}.re"), v.re.len(), n) & p.finite(&format!("{field}.re"), &v.re);
    if let Some(im) = &v.im {
        ok &= p.dim(&format!("{field}.im"), im.len(), n) & p.finite(&format!("{field}.im"), im);
    }
    ok.then(|| {
        DVector::from_fn(n, |i, _| Complex64::new(v.re[i], v.im.as_ref().map_or(0.0, |im| im[i])))
    })
}

fn real_matrix(p: &mut Problems, field: &str, rows: &[Vec<f64>], n: usize) -> bool {
    let mut ok = p.dim(&format!("{field} rows"), rows.len(), n);
    for (i, row) in rows.iter().enumerate() {
        ok &= p.dim(&format!("{field}[{i}]"), row.len(), n) && p.finite(&format!("{field}[{i}]"), row);
    }
    ok
}

fn complex_matrix(p: &mut Problems, field: &str, m: &ComplexMatrixConfig, n: usize) -> Option<DMatrix<Complex64>> {
    let mut ok = real_matrix(p, &format!("{field}.re"), &m.re, n);
    if let Some(im) = &m.im {
        ok &= real_matrix(p, &format!("{field}.im"), im, n);
    }
    ok.then(|| {
        DMatrix::from_fn(n, n, |i, j| Complex64::new(m.re[i][j], m.im.as_ref().map_or(0.0, |im| im[i][j])))
    })
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self> {
        let mut p = Problems(Vec::new());
        let n = config.n;
        if config.schema_version != SCHEMA_VERSION {
            p.push(format!("schema_version {} unsupported, expected {SCHEMA_VERSION}", config.schema_version));
        }
        if config.id.is_empty() || config.id.contains(['/', '\\']) {
            p.push("id must be a non-empty name without path separators");
        }
        if n < 2 {
            p.push(format!("n must be at least 2, got {n}"));
        }

        let params = match MetricParams::new(config.metric_params.a_coeffs.clone(), config.metric_params.b_coeffs.clone()) {
            Ok(params) => Some(params),
            Err(e) => {
                p.push(format!("metric_params: {e}"));
                None
            }
        };

        let spec = if n >= 2 { build_spec(&mut p, &config.hamiltonian, n) } else { None };
        let x0 = if n >= 2 { build_initial(&mut p, &config.initial, n) } else { None };

        let h = config.integrator.h;
        if !(h > 0.0 && h.is_finite()) {
            p.push(format!("integrator.h must be positive and finite, got {h}"));
        }
        let steps = config.integrator.steps;
        if steps == 0 {
            p.push("integrator.steps must be at least 1");
        }
        if !(h * steps as f64).is_finite() {
            p.push("integrator.h * integrator.steps overflows");
        }

        let mut checks = Vec::with_capacity(config.checks.len());
        for entry in &config.checks {
            match CheckRequest::from_entry(entry) {
                Ok(req) => {
                    if checks.iter().any(|c: &CheckRequest| c.kind == req.kind) {
                        p.push(format!("check '{}' listed twice", req.kind.name()));
                    }
                    checks.push(req);
                }
                Err(msg) => p.push(msg),
            }
        }
        if let Some(spec) = &spec {
            for req in &checks {
                if req.kind.needs_pure_kernel() && !(spec.is_pure_kernel() && spec.hermiticity_defect() <= herm_tol(spec)) {
                    p.push(format!("check '{}' requires a pure Hermitian kernel", req.kind.name()));
                }
            }
        }
        if checks.iter().any(|c| c.kind == CheckKind::Convergence) && !steps.is_multiple_of(4) {
            p.push("check 'convergence' needs integrator.steps divisible by 4");
        }

        if !p.0.is_empty() {
            return Err(CliError::Config(p.0));
        }
        Ok(Scenario {
            params: params.expect("validated"),
            spec: spec.expect("validated"),
            x0: x0.expect("validated"),
            h,
            steps: steps as usize,
            checks,
            config,
        })
    }
}

fn herm_tol(spec: &HamiltonianSpec) -> f64 {
    let scale = spec.kernel().iter().map(|z| z.norm()).fold(1.0, f64::max);
    HERMITICITY_TOL * scale
}

fn build_spec(p: &mut Problems, cfg: &HamiltonianConfig, n: usize) -> Option<HamiltonianSpec> {
    let kernel = match &cfg.kernel {
        Some(m) => complex_matrix(p, "hamiltonian.kernel", m, n),
        None => Some(DMatrix::zeros(n, n)),
    };
    let bra = cfg.linear_bra.as_ref().map(|v| complex_vector(p, "hamiltonian.linear_bra", v, n));
    let ket = cfg.linear_ket.as_ref().map(|v| complex_vector(p, "hamiltonian.linear_ket", v, n));
    if !cfg.constant.is_finite() {
        p.push("hamiltonian.constant is not finite");
    }
    if let Some(term) = cfg.nonlinear {
        if !term.strength.is_finite() {
            p.push("hamiltonian.nonlinear.strength is not finite");
        }
    }
    let mut spec = HamiltonianSpec::from_kernel(kernel?).ok()?;
    let tagged = cfg.linear_bra.is_some() || cfg.linear_ket.is_some() || cfg.nonlinear.is_some();
    if !tagged && spec.hermiticity_defect() > herm_tol(&spec) {
        p.push(format!("kernel not Hermitian (max |K - K^dagger| = {:e})", spec.hermiticity_defect()));
        return None;
    }
    if cfg.linear_bra.is_some() || cfg.linear_ket.is_some() {
        let bra = bra.unwrap_or_else(|| Some(DVector::zeros(n)))?;
        let ket = ket.unwrap_or_else(|| Some(DVector::zeros(n)))?;
        spec = spec.with_linear(bra, ket).ok()?;
    }
    spec = spec.with_constant(cfg.constant);
    if let Some(term) = cfg.nonlinear {
        spec = spec.with_nonlinear(term);
    }
    Some(spec)
}

fn build_initial(p: &mut Problems, cfg: &InitialConfig, n: usize) -> Option<PhasePoint> {
    match (&cfg.rho, &cfg.pi, &cfg.psi) {
        (Some(rho), Some(pi), None) => {
            let ok = p.dim("initial.rho", rho.len(), n)
                & p.dim("initial.pi", pi.len(), n)
                & p.finite("initial.rho", rho)
                & p.finite("initial.pi", pi);
            if !ok {
                return None;
            }
            match PhasePoint::new(rho.clone(), pi.clone()) {
                Ok(x) => Some(x),
                Err(e) => {
                    p.push(format!("initial: {e}"));
                    None
                }
            }
        }
        (None, None, Some(psi)) => {
            let amplitudes = complex_vector(p, "initial.psi", psi, n)?;
            let norm = amplitudes.norm();
            if norm == 0.0 {
                p.push("initial.psi is the zero vector");
                return None;
            }
            let state = match ComplexState::new(amplitudes.unscale(norm)) {
                Ok(s) => s,
                Err(e) => {
                    p.push(format!("initial.psi: {e}"));
                    return None;
                }
            };
            let chart = from_complex(&state);
            if !chart.undefined_phase.is_empty() {
                p.push(format!("initial.psi has zero amplitude at {:?}; phase undefined", chart.undefined_phase));
                return None;
            }
            match PhasePoint::new(chart.point.rho().as_slice().to_vec(), chart.point.pi().as_slice().to_vec()) {
                Ok(x) => Some(x),
                Err(e) => {
                    p.push(format!("initial.psi: {e}"));
                    None
                }
            }
        }
        (None, None, None) => {
            p.push("initial: give either rho and pi, or psi");
            None
        }
        (rho, pi, psi) if psi.is_some() && (rho.is_some() || pi.is_some()) => {
            p.push("initial: rho/pi and psi are mutually exclusive");
            None
        }
        (rho, _, _) => {
            p.push(format!("initial: {} given without {}", if rho.is_some() { "rho" } else { "pi" }, if rho.is_some() { "pi" } else { "rho" }));
            None
        }
    }
}
