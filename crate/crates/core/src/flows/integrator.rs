use nalgebra::DVector;

use super::hamiltonian::{eval_hamiltonian, HamiltonianSpec, PhaseFunction};
use super::point::PhasePoint;
use super::VectorField;
use crate::error::{check_dim, Error, Result};
use crate::geometry::check_interior;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointSettings {
    /// Fixed-point iteration stops once the max-norm increment is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MidpointSettings {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 50 }
    }
}

/// Samples of a flow: parameter values, points, and per-sample defects.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub parameter_values: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// `| |rho| - 1 |` at each sample.
    pub norm_defects: Vec<f64>,
    /// `|H(X_k) - H(X_0)|` at each sample.
    pub energy_defects: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().expect("trajectory holds the initial point")
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.norm_defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_energy_defect(&self) -> f64 {
        self.energy_defects.iter().copied().fold(0.0, f64::max)
    }
}

fn split(x: &DVector<f64>) -> (&[f64], &[f64]) {
    x.as_slice().split_at(x.len() / 2)
}

/// One implicit-midpoint step `y = x + h f((x + y)/2)`, solved by fixed-point
/// iteration from an explicit Euler predictor. `step` only labels errors.
pub fn midpoint_step<F: VectorField + ?Sized>(
    field: &F,
    x: &DVector<f64>,
    h: f64,
    settings: MidpointSettings,
    step: usize,
) -> Result<DVector<f64>> {
    let eval = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let (rho, pi) = split(z);
        check_interior(rho)?;
        let f = field.field_at(rho, pi)?;
        check_dim(z.len(), f.len())?;
        Ok(f)
    };
    let mut y = x + eval(x)? * h;
    let mut increment = f64::INFINITY;
    for _ in 0..settings.max_iter {
        let mid = (x + &y) * 0.5;
        let next = x + eval(&mid)? * h;
        increment = (&next - &y).amax();
        y = next;
        if !increment.is_finite() {
            break;
        }
        if increment <= settings.tol {
            check_interior(split(&y).0)?;
            return Ok(y);
        }
    }
    Err(Error::Convergence { step, increment })
}

/// Integrates the flow of `spec` from `x0` with `steps` implicit-midpoint steps of size `h`.
///
/// Stored momenta are reduced to `[0, 2 pi)` after every step.
pub fn integrate_midpoint(spec: &HamiltonianSpec, x0: &PhasePoint, h: f64, steps: usize) -> Result<Trajectory> {
    integrate_midpoint_with(spec, x0, h, steps, MidpointSettings::default())
}

pub(crate) fn integrate_midpoint_with(
    spec: &HamiltonianSpec,
    x0: &PhasePoint,
    h: f64,
    steps: usize,
    settings: MidpointSettings,
) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite() && (h * steps as f64).is_finite()) {
        return Err(Error::Param(format!("step size must be positive and finite, got {h}")));
    }
    check_dim(spec.dim(), x0.dim())?;
    let energy0 = eval_hamiltonian(spec, x0)?.value;

    let mut traj = Trajectory {
        parameter_values: Vec::with_capacity(steps + 1),
        points: Vec::with_capacity(steps + 1),
        norm_defects: Vec::with_capacity(steps + 1),
        energy_defects: Vec::with_capacity(steps + 1),
    };
    let mut record = |k: usize, p: PhasePoint, energy: f64| {
        traj.parameter_values.push(k as f64 * h);
        traj.norm_defects.push((p.total_probability() - 1.0).abs());
        traj.energy_defects.push((energy - energy0).abs());
        traj.points.push(p);
    };
    record(0, x0.clone(), energy0);

    let n = x0.dim();
    let mut x = x0.coordinates();
    for k in 1..=steps {
        x = midpoint_step(spec, &x, h, settings, k)?;
        for p in x.rows_mut(n, n).iter_mut() {
            *p = super::point::wrap_angle(*p);
        }
        let (rho, pi) = split(&x);
        let energy = spec.value_at(rho, pi)?;
        let point = PhasePoint::from_parts_unchecked(DVector::from_column_slice(rho), DVector::from_column_slice(pi));
        record(k, point, energy);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::step_map_symplecticity_defect;
    use crate::flows::{poisson_bracket, Coordinate};
    use std::f64::consts::TAU;

    fn sigma_x() -> HamiltonianSpec {
        HamiltonianSpec::from_real_kernel(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_kernel_is_a_uniform_phase_rotation() {
        let id = HamiltonianSpec::from_real_kernel(3, &[1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let x0 = PhasePoint::new(vec![0.2, 0.5, 0.3], vec![0.1, 2.0, 5.0]).unwrap();
        let h = 0.01;
        let traj = integrate_midpoint(&id, &x0, h, 700).unwrap();
        for (k, p) in traj.points.iter().enumerate() {
            let t = k as f64 * h;
            assert_eq!(p.rho(), x0.rho());
            let expected = PhasePoint::new(x0.rho().as_slice().to_vec(), x0.pi().iter().map(|q| q - t).collect())
                .unwrap();
            assert!(p.distance_max(&expected) < 1e-12, "step {k}");
        }
    }

    #[test]
    fn normalization_flow_shifts_momenta() {
        let x0 = PhasePoint::new(vec![0.6, 0.4], vec![0.3, 1.0]).unwrap();
        let traj = integrate_midpoint(&HamiltonianSpec::normalization(2), &x0, 0.05, 200).unwrap();
        let end = traj.last();
        assert_eq!(end.rho(), x0.rho());
        let nu = 10.0;
        let expected = PhasePoint::new(vec![0.6, 0.4], vec![0.3 + nu, 1.0 + nu]).unwrap();
        assert!(end.distance_max(&expected) < 1e-12);
        assert!(end.pi().iter().all(|&p| (0.0..TAU).contains(&p)));
    }

    #[test]
    fn conserves_normalization_and_energy() {
        let x0 = PhasePoint::new(vec![0.9, 0.1], vec![0.0, 0.0]).unwrap();
        let traj = integrate_midpoint(&sigma_x(), &x0, 1e-3, 2000).unwrap();
        assert!(traj.max_norm_defect() <= 1e-12);
        assert!(traj.max_energy_defect() <= 1e-5);
        assert_eq!(traj.len(), 2001);
        assert_eq!(traj.parameter_values[2000], 2.0);
    }

    #[test]
    fn reports_boundary_and_bad_steps() {
        let x0 = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(integrate_midpoint(&sigma_x(), &x0, 1e-3, 1), Err(Error::Boundary { .. })));
        let x0 = PhasePoint::barycenter(2);
        assert!(matches!(integrate_midpoint(&sigma_x(), &x0, 0.0, 1), Err(Error::Param(_))));
        assert!(matches!(integrate_midpoint(&sigma_x(), &x0, f64::NAN, 1), Err(Error::Param(_))));
    }

    #[test]
    fn fails_to_converge_for_huge_steps() {
        let x0 = PhasePoint::new(vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
        let strong = HamiltonianSpec::from_real_kernel(2, &[0.0, 50.0, 50.0, 0.0]).unwrap();
        let err = integrate_midpoint(&strong, &x0, 0.5, 1).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. } | Error::Boundary { .. }));
    }

    #[test]
    fn step_map_is_symplectic() {
        let x0 = PhasePoint::new(vec![0.35, 0.65], vec![0.4, 1.7]).unwrap();
        let defect = step_map_symplecticity_defect(&sigma_x(), &x0, 0.05, 1e-5).unwrap();
        assert!(defect <= 1e-8, "{defect:e}");
    }

    #[test]
    fn trajectory_derivative_matches_bracket() {
        let x0 = PhasePoint::new(vec![0.7, 0.3], vec![0.2, 0.9]).unwrap();
        let spec = sigma_x();
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let traj = integrate_midpoint(&spec, &x0, h, 3).unwrap();
            let (prev, mid, next) = (&traj.points[0], &traj.points[1], &traj.points[2]);
            let f = Coordinate::Rho(0);
            let fd = (f.value(next).unwrap() - f.value(prev).unwrap()) / (2.0 * h);
            errs.push((fd - poisson_bracket(&f, &spec, mid).unwrap()).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!((3.0..5.0).contains(&ratio), "{errs:?}");
    }
}
