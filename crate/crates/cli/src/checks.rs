//! Check catalog: names, default tolerances and evaluation against a run.

use hkflow_core::diagnostics::{
    ab_independence_sweep, classify_flow, convergence_study, default_metric_families, default_sample_points,
    fs_consistency, ConvergenceTable, FlowClassification, InducedFixture, FS_RATIO_LIMIT,
};
use hkflow_core::geometry::{complex_structure, induced_metric_ts};
use hkflow_core::hilbert::{from_complex, to_complex, HermitianOperator, UnitaryPropagator};
use hkflow_core::sampling::{random_tangent, rng};
use hkflow_core::{CheckRecord, Trajectory};

use crate::config::{CheckEntry, Scenario};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Normalization,
    Energy,
    Oracle,
    BornRule,
    ComplexStructure,
    Symplectic,
    Killing,
    GaugeInvariance,
    RealValued,
    HamiltonKilling,
    Convergence,
    FsConsistency,
    AbIndependence,
}

impl CheckKind {
    pub const ALL: [CheckKind; 13] = [
        CheckKind::Normalization,
        CheckKind::Energy,
        CheckKind::Oracle,
        CheckKind::BornRule,
        CheckKind::ComplexStructure,
        CheckKind::Symplectic,
        CheckKind::Killing,
        CheckKind::GaugeInvariance,
        CheckKind::RealValued,
        CheckKind::HamiltonKilling,
        CheckKind::Convergence,
        CheckKind::FsConsistency,
        CheckKind::AbIndependence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Normalization => "normalization",
            CheckKind::Energy => "energy",
            CheckKind::Oracle => "oracle",
            CheckKind::BornRule => "born_rule",
            CheckKind::ComplexStructure => "complex_structure",
            CheckKind::Symplectic => "symplectic",
            CheckKind::Killing => "killing",
            CheckKind::GaugeInvariance => "gauge_invariance",
            CheckKind::RealValued => "real_valued",
            CheckKind::HamiltonKilling => "hamilton_killing",
            CheckKind::Convergence => "convergence",
            CheckKind::FsConsistency => "fs_consistency",
            CheckKind::AbIndependence => "ab_independence",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckKind::Normalization => 1e-10,
            CheckKind::Energy => 1e-6,
            CheckKind::Oracle => 1e-5,
            CheckKind::BornRule => 1e-12,
            CheckKind::ComplexStructure => 1e-12,
            CheckKind::Symplectic => 1e-8,
            CheckKind::Killing => 1e-6,
            CheckKind::GaugeInvariance => 1e-10,
            CheckKind::RealValued => 1e-9,
            // residual is the largest residual/tolerance ratio of the four properties
            CheckKind::HamiltonKilling => 1.0,
            // distance of the fitted order from 2
            CheckKind::Convergence => 0.1,
            CheckKind::FsConsistency => 1e-4,
            CheckKind::AbIndependence => 1e-9,
        }
    }

    pub fn needs_pure_kernel(self) -> bool {
        matches!(self, CheckKind::Oracle | CheckKind::Convergence)
    }

    fn uses_classification(self) -> bool {
        matches!(
            self,
            CheckKind::Symplectic
                | CheckKind::Killing
                | CheckKind::GaugeInvariance
                | CheckKind::RealValued
                | CheckKind::HamiltonKilling
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckRequest {
    pub kind: CheckKind,
    pub tolerance: f64,
    /// Whether the property is expected to hold; `false` marks a negative control.
    pub expect: bool,
}

impl CheckRequest {
    pub fn from_entry(entry: &CheckEntry) -> std::result::Result<Self, String> {
        let (name, tolerance, expect) = match entry {
            CheckEntry::Name(name) => (name.as_str(), None, None),
            CheckEntry::Detailed { name, tolerance, expect } => (name.as_str(), *tolerance, *expect),
        };
        let kind = CheckKind::parse(name).ok_or_else(|| {
            let known: Vec<_> = CheckKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown check '{name}' (known: {})", known.join(", "))
        })?;
        let tolerance = tolerance.unwrap_or(kind.default_tolerance());
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(format!("check '{name}': tolerance must be finite and non-negative"));
        }
        Ok(Self { kind, tolerance, expect: expect.unwrap_or(true) })
    }
}

/// Everything a run produces apart from the trajectory itself.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub checks: Vec<CheckRecord>,
    pub classification: Option<FlowClassification>,
    pub convergence: Option<ConvergenceTable>,
}

const SUBSAMPLE: usize = 100;

fn subsample(traj: &Trajectory) -> impl Iterator<Item = &hkflow_core::PhasePoint> {
    let stride = traj.len().div_ceil(SUBSAMPLE).max(1);
    traj.points.iter().step_by(stride).chain(std::iter::once(traj.last()))
}

pub fn evaluate(scenario: &Scenario, traj: &Trajectory) -> Result<Evaluation> {
    let classification = if scenario.checks.iter().any(|c| c.kind.uses_classification()) {
        let samples = default_sample_points(scenario.x0.dim(), scenario.config.seed);
        Some(classify_flow(&scenario.spec, &samples)?)
    } else {
        None
    };
    let mut convergence = None;
    let mut checks = Vec::with_capacity(scenario.checks.len());
    for req in &scenario.checks {
        let residual = match req.kind {
            CheckKind::Normalization => traj.max_norm_defect(),
            CheckKind::Energy => traj.max_energy_defect(),
            CheckKind::Oracle => oracle_error(scenario, traj)?,
            CheckKind::BornRule => born_rule_defect(traj),
            CheckKind::ComplexStructure => {
                let mut worst = 0.0f64;
                for p in subsample(traj) {
                    worst = worst.max(complex_structure(p.rho().as_slice(), &scenario.params)?.square_defect());
                }
                worst
            }
            CheckKind::Symplectic => classification.expect("computed").preserves_symplectic.residual,
            CheckKind::Killing => classification.expect("computed").preserves_metric.residual,
            CheckKind::GaugeInvariance => classification.expect("computed").preserves_normalization.residual,
            CheckKind::RealValued => classification.expect("computed").is_real_valued.residual,
            CheckKind::HamiltonKilling => {
                let c = classification.expect("computed");
                [c.preserves_symplectic, c.preserves_metric, c.preserves_normalization, c.is_real_valued]
                    .iter()
                    .map(|p| if p.tolerance > 0.0 { p.residual / p.tolerance } else { f64::INFINITY })
                    .fold(0.0, f64::max)
            }
            CheckKind::Convergence => {
                let tau = scenario.h * scenario.steps as f64;
                let m = scenario.steps as f64;
                let h_list = [tau / (m / 4.0), tau / (m / 2.0), tau / m, tau / (2.0 * m)];
                let study = convergence_study(&scenario.spec, &scenario.x0, &h_list, tau)?;
                let residual = study.checks[0].residual;
                convergence = study.convergence;
                residual
            }
            CheckKind::FsConsistency => fs_residual(scenario)?,
            CheckKind::AbIndependence => {
                let mut r = rng(scenario.config.seed);
                let n = scenario.x0.dim();
                let (drho, dpi) = random_tangent(&mut r, n);
                let fixture = InducedFixture {
                    rho: scenario.x0.rho().as_slice().to_vec(),
                    drho: drho.as_slice().to_vec(),
                    dpi: dpi.as_slice().to_vec(),
                };
                ab_independence_sweep(&fixture, &default_metric_families())?
            }
        };
        checks.push(CheckRecord::expecting(req.kind.name(), residual, req.tolerance, req.expect));
    }
    Ok(Evaluation { checks, classification, convergence })
}

fn oracle_error(scenario: &Scenario, traj: &Trajectory) -> Result<f64> {
    let op = HermitianOperator::try_from(&scenario.spec)?;
    let tau = *traj.parameter_values.last().expect("non-empty trajectory");
    let exact = UnitaryPropagator::new(&op).apply(&to_complex(&scenario.x0), tau)?;
    Ok(to_complex(traj.last()).distance(&exact))
}

/// `max |rho_i - |psi_i|^2|` with `psi` the chart image of each sample, read back.
fn born_rule_defect(traj: &Trajectory) -> f64 {
    let mut worst = 0.0f64;
    for p in &traj.points {
        let psi = to_complex(p);
        let back = from_complex(&psi).point;
        for ((rho, z), r) in p.rho().iter().zip(psi.amplitudes().iter()).zip(back.rho().iter()) {
            worst = worst.max((rho - z.norm_sqr()).abs()).max((rho - r).abs());
        }
    }
    worst
}

/// `|limit - FS_RATIO_LIMIT|` along a seeded unit-length direction at the initial state.
fn fs_residual(scenario: &Scenario) -> Result<f64> {
    let x = &scenario.x0;
    let n = x.dim();
    let (drho, dpi) = random_tangent(&mut rng(scenario.config.seed), n);
    let len = induced_metric_ts(
        x.rho().as_slice(),
        drho.as_slice(),
        dpi.as_slice(),
        &hkflow_core::MetricParams::canonical(),
    )?
    .sqrt();
    let fs = fs_consistency(&to_complex(x), (drho / len).as_slice(), (dpi / len).as_slice(), &[1e-3, 1e-4, 1e-5])?;
    Ok(fs.limit_estimate().map_or(f64::INFINITY, |l| (l - FS_RATIO_LIMIT).abs()))
}
