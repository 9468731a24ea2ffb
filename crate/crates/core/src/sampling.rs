//! Seeded fixtures: interior points, Hermitian kernels, tangent directions.
//!
//! All randomness goes through [`ChaCha8Rng`] seeded with
//! [`SeedableRng::seed_from_u64`], so fixtures are reproducible across platforms.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::flows::PhasePoint;
use crate::hilbert::{ComplexState, HermitianOperator};

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalized point with weights `0.5 + U[0,1)` and momenta `U[0, 2 pi)`.
///
/// Every coordinate is at least `1 / (3n - 2)`, which keeps finite differences
/// well away from the faces of the simplex.
pub fn random_interior_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PhasePoint {
    let weights: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let rho = weights.iter().map(|w| w / total).collect();
    let pi = (0..n).map(|_| TAU * rng.random::<f64>()).collect();
    PhasePoint::new(rho, pi).expect("weights are positive")
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexState {
    crate::hilbert::to_complex(&random_interior_point(rng, n))
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `(A + A^†)/2` with i.i.d. standard complex Gaussian entries (GUE-style).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianOperator {
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(normal(rng), normal(rng)));
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    HermitianOperator::new(h).expect("symmetrized matrix is Hermitian")
}

/// [`random_hermitian`] rescaled to unit spectral radius.
pub fn random_unit_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianOperator {
    let h = random_hermitian(rng, n);
    let radius = h.matrix().clone().symmetric_eigenvalues().amax();
    HermitianOperator::new(h.matrix().map(|z| z / radius)).expect("rescaled Hermitian matrix")
}

/// Direction `(d_rho, d_pi)` with `sum(d_rho) = 0`, entries of order one.
pub fn random_tangent<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (DVector<f64>, DVector<f64>) {
    let raw = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let drho = raw.add_scalar(-raw.mean());
    let dpi = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (drho, dpi)
}
