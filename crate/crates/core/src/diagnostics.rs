//! Numerical checks of the structural identities: Lie derivatives of `G` and
//! `Omega` along flows, Hamilton-Killing classification, Fubini-Study
//! consistency of the induced metric, independence from `A` and `B`, and
//! integrator convergence against exact propagation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::flows::{
    check_normalization_generator, integrate_midpoint, midpoint_step, HamiltonianSpec, MidpointSettings,
    PhasePoint, VectorField,
};
use crate::geometry::{
    embedding_length, induced_metric_ts, phase_space_metric, symplectic_matrix, MetricParams,
    NORMALIZATION_TOL,
};
use crate::hilbert::{from_complex, inner_product, to_complex, ComplexState, HermitianOperator, UnitaryPropagator};
use crate::sampling;

pub const METRIC_TOL: f64 = 1e-6;
pub const SYMPLECTIC_TOL: f64 = 1e-8;
pub const NORMALIZATION_GENERATOR_TOL: f64 = 1e-10;
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Limit of [`fs_consistency`] ratios: the induced metric is twice the squared
/// Fubini-Study angle. Frozen regression value.
pub const FS_RATIO_LIMIT: f64 = 2.0;
/// Endpoint errors at or below this count as exact in convergence studies.
pub const EXACT_ERROR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    /// Central differences at `h` and `h/2` combined to cancel the `h^2` term.
    Richardson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSettings {
    pub step: f64,
    pub scheme: FdScheme,
}

impl Default for FdSettings {
    fn default() -> Self {
        Self { step: DEFAULT_FD_STEP, scheme: FdScheme::Richardson }
    }
}

impl FdSettings {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(1e-6..=1e-3).contains(&self.step) {
            return Err(Error::Param(format!("fd step must lie in [1e-6, 1e-3], got {:e}", self.step)));
        }
        Ok(())
    }
}

/// Derivative of `f` at `x` along coordinate `axis`.
fn partial<T, F>(f: &F, x: &DVector<f64>, axis: usize, fd: FdSettings) -> Result<T>
where
    F: Fn(&DVector<f64>) -> Result<T>,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let central = |h: f64| -> Result<T> {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[axis] += h;
        minus[axis] -= h;
        Ok((f(&plus)? - f(&minus)?) * (0.5 / h))
    };
    match fd.scheme {
        FdScheme::Central => central(fd.step),
        FdScheme::Richardson => {
            let coarse = central(fd.step)?;
            let fine = central(0.5 * fd.step)?;
            Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
        }
    }
}

fn split(x: &DVector<f64>) -> (&[f64], &[f64]) {
    x.as_slice().split_at(x.len() / 2)
}

/// `(L_V T)_ab = V^c d_c T_ab + T_cb d_a V^c + T_ac d_b V^c` for a covariant
/// 2-tensor field `T`, with all derivatives taken by finite differences.
pub fn lie_derivative<F, T>(field: &F, tensor: T, x: &PhasePoint, fd: FdSettings) -> Result<DMatrix<f64>>
where
    F: VectorField + ?Sized,
    T: Fn(&[f64], &[f64]) -> Result<DMatrix<f64>>,
{
    fd.validate()?;
    x.check_interior()?;
    let coords = x.coordinates();
    let dim = coords.len();
    let v = field.field_at(x.rho().as_slice(), x.pi().as_slice())?;
    check_dim(dim, v.len())?;
    let t = tensor(x.rho().as_slice(), x.pi().as_slice())?;

    let field_fn = |z: &DVector<f64>| {
        let (rho, pi) = split(z);
        field.field_at(rho, pi)
    };
    let tensor_fn = |z: &DVector<f64>| {
        let (rho, pi) = split(z);
        tensor(rho, pi)
    };

    // jac[(c, a)] = d_a V^c
    let mut jac = DMatrix::zeros(dim, dim);
    let mut transport = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        jac.set_column(a, &partial(&field_fn, &coords, a, fd)?);
        if v[a] != 0.0 {
            transport += partial(&tensor_fn, &coords, a, fd)? * v[a];
        }
    }
    Ok(transport + jac.transpose() * &t + &t * &jac)
}

/// `L_V G` for the flat-embedding bundle metric.
pub fn lie_derivative_metric<F: VectorField + ?Sized>(field: &F, x: &PhasePoint, fd_step: f64) -> Result<DMatrix<f64>> {
    let canonical = MetricParams::canonical();
    lie_derivative(
        field,
        |rho: &[f64], _: &[f64]| phase_space_metric(rho, &canonical).map(|g| g.matrix),
        x,
        FdSettings::with_step(fd_step),
    )
}

/// `L_V Omega`.
pub fn lie_derivative_symplectic<F: VectorField + ?Sized>(
    field: &F,
    x: &PhasePoint,
    fd_step: f64,
) -> Result<DMatrix<f64>> {
    let n = x.dim();
    lie_derivative(field, |_: &[f64], _: &[f64]| Ok(symplectic_matrix(n)), x, FdSettings::with_step(fd_step))
}

/// `max |D^T Omega D - Omega|` for the Jacobian `D` of one implicit-midpoint step,
/// itself obtained by central differences with step `fd_step`.
pub fn step_map_symplecticity_defect(spec: &HamiltonianSpec, x: &PhasePoint, h: f64, fd_step: f64) -> Result<f64> {
    let coords = x.coordinates();
    let dim = coords.len();
    // tighter than the integrator default: iteration error is amplified by 1/fd_step
    let settings = MidpointSettings { tol: 1e-15, max_iter: 100 };
    let step = |z: &DVector<f64>| midpoint_step(spec, z, h, settings, 1).or_else(|e| match e {
        Error::Convergence { .. } => midpoint_step(spec, z, h, MidpointSettings::default(), 1),
        other => Err(other),
    });
    let fd = FdSettings { step: fd_step, scheme: FdScheme::Central };
    let mut jac = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        jac.set_column(a, &partial(&step, &coords, a, fd)?);
    }
    let omega = symplectic_matrix(x.dim());
    Ok((jac.transpose() * &omega * &jac - omega).amax())
}

/// Outcome of one property test: the residual, its tolerance, and whether it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub holds: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl PropertyCheck {
    pub fn new(residual: f64, tolerance: f64) -> Self {
        Self { holds: residual <= tolerance, residual, tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowClassification {
    pub preserves_symplectic: PropertyCheck,
    pub preserves_metric: PropertyCheck,
    pub preserves_normalization: PropertyCheck,
    pub is_real_valued: PropertyCheck,
}

impl FlowClassification {
    pub fn is_hamilton_killing(&self) -> bool {
        self.preserves_symplectic.holds
            && self.preserves_metric.holds
            && self.preserves_normalization.holds
            && self.is_real_valued.holds
    }
}

/// Eight seeded interior points plus the barycenter.
pub fn default_sample_points(n: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = sampling::rng(seed);
    let mut points: Vec<_> = (0..8).map(|_| sampling::random_interior_point(&mut rng, n)).collect();
    points.push(PhasePoint::barycenter(n));
    points
}

pub fn classify_flow(spec: &HamiltonianSpec, samples: &[PhasePoint]) -> Result<FlowClassification> {
    if samples.is_empty() {
        return Err(Error::Param("classification needs at least one sample point".into()));
    }
    let (mut imag, mut norm, mut symp, mut metric) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in samples {
        check_dim(spec.dim(), x.dim())?;
        x.check_interior()?;
        imag = imag.max(spec.evaluate_at(x.rho().as_slice(), x.pi().as_slice())?.im.abs());
        norm = norm.max(check_normalization_generator(spec, x)?.abs());
        symp = symp.max(lie_derivative_symplectic(spec, x, DEFAULT_FD_STEP)?.amax());
        metric = metric.max(lie_derivative_metric(spec, x, DEFAULT_FD_STEP)?.amax());
    }
    Ok(FlowClassification {
        preserves_symplectic: PropertyCheck::new(symp, SYMPLECTIC_TOL),
        preserves_metric: PropertyCheck::new(metric, METRIC_TOL),
        preserves_normalization: PropertyCheck::new(norm, NORMALIZATION_GENERATOR_TOL),
        is_real_valued: PropertyCheck::new(imag, crate::flows::REALNESS_TOL),
    })
}

/// One entry of a Fubini-Study consistency sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FsRatio {
    Ratio(f64),
    /// The displacement lies along the gauge orbit: both distances vanish.
    GaugeNull,
}

impl FsRatio {
    pub fn value(&self) -> Option<f64> {
        match *self {
            FsRatio::Ratio(r) => Some(r),
            FsRatio::GaugeNull => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FsConsistency {
    pub epsilons: Vec<f64>,
    pub ratios: Vec<FsRatio>,
}

impl FsConsistency {
    pub fn is_gauge_null(&self) -> bool {
        self.ratios.iter().all(|r| *r == FsRatio::GaugeNull)
    }

    /// `|r(eps_last) - r(eps_prev)|`.
    pub fn cauchy_gap(&self) -> Option<f64> {
        let k = self.ratios.len();
        if k < 2 {
            return None;
        }
        Some((self.ratios[k - 1].value()? - self.ratios[k - 2].value()?).abs())
    }

    /// Linear extrapolation of the last two ratios to `eps = 0`; the ratio has an
    /// `O(eps)` leading correction.
    pub fn limit_estimate(&self) -> Option<f64> {
        let k = self.ratios.len();
        if k < 2 {
            return self.ratios.first().and_then(FsRatio::value);
        }
        let (e1, e2) = (self.epsilons[k - 2], self.epsilons[k - 1]);
        let (r1, r2) = (self.ratios[k - 2].value()?, self.ratios[k - 1].value()?);
        Some((e1 * r2 - e2 * r1) / (e1 - e2))
    }
}

/// Ratio of the induced metric to the squared Fubini-Study angle
/// `arccos |<psi|phi(eps)>|` (Fubini-Study angle) for finite displacements `eps (d_rho, d_pi)`.
pub fn fs_consistency(psi: &ComplexState, drho: &[f64], dpi: &[f64], epsilons: &[f64]) -> Result<FsConsistency> {
    check_dim(psi.dim(), drho.len())?;
    check_dim(psi.dim(), dpi.len())?;
    if !psi.is_normalized() {
        return Err(Error::Normalization(format!("|psi|^2 = {}, expected 1", psi.total_probability())));
    }
    let base = from_complex(psi).point;
    base.check_interior()?;
    let canonical = MetricParams::canonical();
    let rho = base.rho().as_slice();
    let mut ratios = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let dr: Vec<f64> = drho.iter().map(|d| eps * d).collect();
        let dp: Vec<f64> = dpi.iter().map(|d| eps * d).collect();
        let numerator = induced_metric_ts(rho, &dr, &dp, &canonical)?;
        let scale = embedding_length(rho, &dr, &dp, &canonical)?;
        if numerator <= 1e-24 * scale || scale == 0.0 {
            ratios.push(FsRatio::GaugeNull);
            continue;
        }
        let moved = PhasePoint::new(
            rho.iter().zip(&dr).map(|(r, d)| r + d).collect(),
            base.pi().iter().zip(&dp).map(|(p, d)| p + d).collect(),
        )?;
        moved.check_interior()?;
        let phi = to_complex(&moved);
        let overlap = inner_product(psi, &phi)?;
        // arccos |<psi|phi>| without the cancellation of acos near 1
        let transverse = (phi.amplitudes() - psi.amplitudes() * overlap).norm();
        let angle = transverse.atan2(overlap.norm());
        if angle == 0.0 {
            return Err(Error::Param(format!("epsilon {eps:e} too small to resolve the overlap")));
        }
        ratios.push(FsRatio::Ratio(numerator / (angle * angle)));
    }
    Ok(FsConsistency { epsilons: epsilons.to_vec(), ratios })
}

/// A base point and displacement on the normalized bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedFixture {
    pub rho: Vec<f64>,
    pub drho: Vec<f64>,
    pub dpi: Vec<f64>,
}

impl InducedFixture {
    pub fn random(seed: u64, n: usize) -> Self {
        let mut rng = sampling::rng(seed);
        let x = sampling::random_interior_point(&mut rng, n);
        let (drho, dpi) = sampling::random_tangent(&mut rng, n);
        Self { rho: x.rho().as_slice().to_vec(), drho: drho.as_slice().to_vec(), dpi: dpi.as_slice().to_vec() }
    }
}

/// Metric parameter families with `B(1) = 1`.
pub fn default_metric_families() -> Vec<MetricParams> {
    let fam = |a: &[f64], b: &[f64]| MetricParams::new(a.to_vec(), b.to_vec()).expect("B(1) = 1");
    vec![
        MetricParams::canonical(),
        fam(&[3.0], &[1.0]),
        fam(&[0.0, 0.0, 1.0], &[0.0, 1.0]),
        fam(&[0.5, 1.0], &[2.0, -1.0]),
        fam(&[-0.1], &[0.0, 0.0, 0.0, 1.0]),
        fam(&[1.0, -1.0, 1.0], &[0.5, 0.0, 0.5]),
    ]
}

/// Largest relative spread `(max - min) / max |value|` of the induced metric
/// across `families`, each of which must have `B(1) = 1`.
pub fn ab_independence_sweep(fixture: &InducedFixture, families: &[MetricParams]) -> Result<f64> {
    if families.is_empty() {
        return Err(Error::Param("need at least one metric family".into()));
    }
    let mut values = Vec::with_capacity(families.len());
    for params in families {
        let b1 = params.b(1.0);
        if (b1 - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Param(format!("units not fixed: B(1) = {b1}, expected 1")));
        }
        values.push(induced_metric_ts(&fixture.rho, &fixture.drho, &fixture.dpi, params)?);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(if scale == 0.0 { 0.0 } else { (max - min) / scale })
}

/// A named check with its residual and tolerance. `pass` is `holds == expected`,
/// so negative controls can require a property to fail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub expected: bool,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::expecting(name, residual, tolerance, true)
    }

    pub fn expecting(name: impl Into<String>, residual: f64, tolerance: f64, expected: bool) -> Self {
        let holds = residual <= tolerance;
        Self { name: name.into(), residual, tolerance, holds, expected, pass: holds == expected }
    }

    pub fn from_property(name: impl Into<String>, check: PropertyCheck, expected: bool) -> Self {
        Self::expecting(name, check.residual, check.tolerance, expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub steps: usize,
    pub endpoint_error: f64,
    /// Order estimated from this row and the previous one.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub tau_total: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log h`.
    pub fitted_order: Option<f64>,
    /// Every endpoint error is at or below [`EXACT_ERROR_FLOOR`].
    pub exact: bool,
}

impl ConvergenceTable {
    /// Ratios `error(h_k) / error(h_{k+1})` between consecutive rows.
    pub fn error_ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[0].endpoint_error / w[1].endpoint_error).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub scenario_id: String,
    pub checks: Vec<CheckRecord>,
    pub convergence: Option<ConvergenceTable>,
}

impl DiagnosticsReport {
    pub fn new(scenario_id: impl Into<String>) -> Self {
        Self { scenario_id: scenario_id.into(), checks: Vec::new(), convergence: None }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn fitted_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Midpoint endpoint errors against exact propagation for each `h` in `h_list`.
///
/// The report carries the table and a `convergence_order` check requiring the
/// fitted order to lie in `[1.9, 2.1]`, unless every error is at rounding level.
pub fn convergence_study(
    spec: &HamiltonianSpec,
    x0: &PhasePoint,
    h_list: &[f64],
    tau_total: f64,
) -> Result<DiagnosticsReport> {
    let op = HermitianOperator::try_from(spec)?;
    if h_list.is_empty() || tau_total.is_nan() || tau_total <= 0.0 {
        return Err(Error::Param("convergence study needs step sizes and a positive span".into()));
    }
    let psi0 = to_complex(x0);
    let exact = UnitaryPropagator::new(&op).apply(&psi0, tau_total)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let steps = (tau_total / h).round();
        if steps.is_nan() || steps < 1.0 || (steps * h - tau_total).abs() > 1e-9 * tau_total {
            return Err(Error::Param(format!("step {h:e} does not divide span {tau_total}")));
        }
        let steps = steps as usize;
        let traj = integrate_midpoint(spec, x0, h, steps)?;
        let endpoint_error = to_complex(traj.last()).distance(&exact);
        let observed_order = rows.last().and_then(|prev| {
            (prev.endpoint_error > EXACT_ERROR_FLOOR && endpoint_error > EXACT_ERROR_FLOOR)
                .then(|| (prev.endpoint_error / endpoint_error).ln() / (prev.h / h).ln())
        });
        rows.push(ConvergenceRow { h, steps, endpoint_error, observed_order });
    }
    let resolved: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.endpoint_error > EXACT_ERROR_FLOOR)
        .map(|r| (r.h.ln(), r.endpoint_error.ln()))
        .collect();
    let is_exact = resolved.is_empty();
    let fitted_order = fitted_slope(&resolved);

    let mut report = DiagnosticsReport::new("convergence_study");
    let residual = if is_exact {
        0.0
    } else {
        fitted_order.map_or(f64::INFINITY, |p| (p - 2.0).abs())
    };
    report.push(CheckRecord::new("convergence_order", residual, 0.1));
    report.convergence = Some(ConvergenceTable { tau_total, rows, fitted_order, exact: is_exact });
    Ok(report)
}
