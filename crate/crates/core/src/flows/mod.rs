//! Hamiltonian flows on the cotangent bundle of the positive cone.
//!
//! Real coordinates are `X = (rho, pi)`; Hamilton's equations read
//! `d rho/d tau = dH/d pi`, `d pi/d tau = -dH/d rho`.

mod gauge;
mod hamiltonian;
mod integrator;
mod point;

pub use gauge::{gauge_canonicalize, gauge_shift};
pub use hamiltonian::{
    check_normalization_generator, eval_hamiltonian, hamiltonian_vector_field, poisson_bracket,
    Coordinate, Gradient, HamiltonianSpec, HamiltonianValue, NonlinearKind, NonlinearTerm,
    PhaseFunction, REALNESS_TOL,
};
pub use integrator::{integrate_midpoint, midpoint_step, MidpointSettings, Trajectory};
pub use point::{circular_difference, wrap_angle, PhasePoint, TangentVector};

use nalgebra::DVector;

use crate::error::Result;

/// A vector field on the bundle, evaluated on raw coordinate slices.
///
/// The returned vector has length `2n`, laid out as `(d_rho, d_pi)`.
pub trait VectorField {
    fn field_at(&self, rho: &[f64], pi: &[f64]) -> Result<DVector<f64>>;

    fn field(&self, x: &PhasePoint) -> Result<TangentVector> {
        self.field_at(x.rho().as_slice(), x.pi().as_slice()).map(TangentVector::new)
    }
}

impl<F: PhaseFunction + ?Sized> VectorField for F {
    fn field_at(&self, rho: &[f64], pi: &[f64]) -> Result<DVector<f64>> {
        let grad = self.gradient_at(rho, pi)?;
        let n = rho.len();
        Ok(DVector::from_fn(2 * n, |k, _| if k < n { grad.d_pi[k] } else { -grad.d_rho[k - n] }))
    }
}

/// Wraps a closure `(rho, pi) -> (d_rho, d_pi)` as a [`VectorField`], for fields that
/// do not come from a Hamiltonian.
pub struct FnField<C>(pub C);

impl<C> VectorField for FnField<C>
where
    C: Fn(&[f64], &[f64]) -> DVector<f64>,
{
    fn field_at(&self, rho: &[f64], pi: &[f64]) -> Result<DVector<f64>> {
        Ok((self.0)(rho, pi))
    }
}
