use std::f64::consts::{PI, TAU};

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{check_interior, NORMALIZATION_TOL};

/// A point `(rho, pi)` of the bundle over the positive cone.
///
/// `pi` is kept as the lift it was given; [`PhasePoint::wrapped`] reduces it to
/// `[0, 2 pi)`. Everything that depends on `pi` only through `exp(i pi)` is
/// insensitive to the choice of lift.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    rho: DVector<f64>,
    pi: DVector<f64>,
}

impl PhasePoint {
    pub fn new(rho: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        check_dim(rho.len(), pi.len())?;
        if rho.is_empty() {
            return Err(Error::Param("phase point needs at least one component".into()));
        }
        if let Some(i) = rho.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Param(format!("rho[{i}] = {} is not a non-negative number", rho[i])));
        }
        if let Some(i) = pi.iter().position(|p| !p.is_finite()) {
            return Err(Error::Param(format!("pi[{i}] is not finite")));
        }
        Ok(Self { rho: DVector::from_vec(rho), pi: DVector::from_vec(pi) })
    }

    /// Uniform distribution with zero momenta.
    pub fn barycenter(n: usize) -> Self {
        Self { rho: DVector::from_element(n, 1.0 / n as f64), pi: DVector::zeros(n) }
    }

    /// Builds a point from the stacked `2n` coordinate vector.
    pub fn from_coordinates(x: &DVector<f64>) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::Param(format!("coordinate vector has odd length {}", x.len())));
        }
        let n = x.len() / 2;
        Self::new(x.rows(0, n).iter().copied().collect(), x.rows(n, n).iter().copied().collect())
    }

    pub(crate) fn from_parts_unchecked(rho: DVector<f64>, pi: DVector<f64>) -> Self {
        Self { rho, pi }
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &DVector<f64> {
        &self.rho
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    /// `|rho|`, the total (unnormalized) probability.
    pub fn total_probability(&self) -> f64 {
        self.rho.sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_probability() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn check_interior(&self) -> Result<()> {
        check_interior(self.rho.as_slice())
    }

    pub fn coordinates(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |k, _| if k < n { self.rho[k] } else { self.pi[k - n] })
    }

    pub fn wrapped(&self) -> Self {
        Self { rho: self.rho.clone(), pi: self.pi.map(wrap_angle) }
    }

    /// Largest componentwise distance to `other`, measuring `pi` on the circle.
    pub fn distance_max(&self, other: &PhasePoint) -> f64 {
        let dr = (&self.rho - &other.rho).amax();
        let dp = self
            .pi
            .iter()
            .zip(other.pi.iter())
            .map(|(a, b)| circular_difference(*a, *b).abs())
            .fold(0.0, f64::max);
        dr.max(dp)
    }
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `a - b` as an angle in `(-pi, pi]`.
pub fn circular_difference(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// A tangent vector of the bundle, `(d rho/d lambda, d pi/d lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(components: DVector<f64>) -> Self {
        Self { components }
    }

    pub fn from_parts(d_rho: &[f64], d_pi: &[f64]) -> Self {
        Self { components: DVector::from_iterator(d_rho.len() + d_pi.len(), d_rho.iter().chain(d_pi).copied()) }
    }

    pub fn dim(&self) -> usize {
        self.components.len() / 2
    }

    pub fn d_rho(&self) -> &[f64] {
        &self.components.as_slice()[..self.dim()]
    }

    pub fn d_pi(&self) -> &[f64] {
        &self.components.as_slice()[self.dim()..]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }
}
