use nalgebra::DVector;

use super::point::PhasePoint;

/// Moves `x` along the gauge orbit: `pi -> pi + nu`, `rho` unchanged. This is the
/// exact flow of the normalization constraint.
pub fn gauge_shift(x: &PhasePoint, nu: f64) -> PhasePoint {
    PhasePoint::from_parts_unchecked(x.rho().clone(), x.pi().add_scalar(nu))
}

/// Representative of the gauge orbit of `x` with `<pi> = sum_i rho_i pi_i = 0`.
///
/// This is the same shift `nu = -<pi>` that minimizes the bundle metric over the
/// orbit. The mean is taken over the stored lift of `pi`, and divided by `|rho|`
/// so points that are only approximately normalized still land on `<pi> = 0`.
pub fn gauge_canonicalize(x: &PhasePoint) -> PhasePoint {
    let total = x.total_probability();
    if total <= 0.0 {
        return x.clone();
    }
    let mean = x.rho().dot(x.pi()) / total;
    let pi: DVector<f64> = x.pi().map(|p| p - mean);
    PhasePoint::from_parts_unchecked(x.rho().clone(), pi)
}
