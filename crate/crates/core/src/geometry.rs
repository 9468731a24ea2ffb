//! Metric, symplectic and complex structures on the positive cone and its
//! cotangent bundle, in real coordinates `X = (rho, pi)`.
//!
//! Tangent vectors of the bundle are laid out as `[d_rho_1..d_rho_n, d_pi_1..d_pi_n]`,
//! so every `2n x 2n` tensor here is a 2x2 block matrix over that split.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Points with any `rho_i` below this are rejected by the real-coordinate tensors.
pub const EPS_FLOOR: f64 = 1e-10;

/// Tolerance on `sum(rho) = 1` and `sum(d_rho) = 0`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// The scalar functions `A(|rho|)` and `B(|rho|)` of the information metric on the
/// positive cone, as polynomials with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    a_coeffs: Vec<f64>,
    b_coeffs: Vec<f64>,
}

impl MetricParams {
    pub fn new(a_coeffs: Vec<f64>, b_coeffs: Vec<f64>) -> Result<Self> {
        if a_coeffs.iter().chain(&b_coeffs).any(|c| !c.is_finite()) {
            return Err(Error::Param("metric coefficients must be finite".into()));
        }
        let params = Self { a_coeffs, b_coeffs };
        let b1 = params.b(1.0);
        if b1 <= 0.0 {
            return Err(Error::Param(format!("B(1) must be positive, got {b1}")));
        }
        Ok(params)
    }

    /// `A = 0`, `B = 1`: the flat embedding.
    pub fn canonical() -> Self {
        Self { a_coeffs: vec![], b_coeffs: vec![1.0] }
    }

    pub fn a_coeffs(&self) -> &[f64] {
        &self.a_coeffs
    }

    pub fn b_coeffs(&self) -> &[f64] {
        &self.b_coeffs
    }

    pub fn a(&self, total: f64) -> f64 {
        horner(&self.a_coeffs, total)
    }

    pub fn b(&self, total: f64) -> f64 {
        horner(&self.b_coeffs, total)
    }

    pub fn is_canonical(&self) -> bool {
        self.a_coeffs.iter().all(|&c| c == 0.0)
            && self.b_coeffs.first() == Some(&1.0)
            && self.b_coeffs[1..].iter().all(|&c| c == 0.0)
    }
}

impl Default for MetricParams {
    fn default() -> Self {
        Self::canonical()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Fails with [`Error::Boundary`] if any coordinate is below [`EPS_FLOOR`].
pub fn check_interior(rho: &[f64]) -> Result<()> {
    match rho.iter().enumerate().find(|(_, &r)| r.is_nan() || r < EPS_FLOOR) {
        Some((index, &value)) => Err(Error::Boundary { index, value }),
        None => Ok(()),
    }
}

/// Information metric `g_ij = A n_i n_j + B/(2 rho_i) delta_ij` on the positive cone.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMetric {
    pub g: DMatrix<f64>,
    pub rho: DVector<f64>,
    // Sherman-Morrison pieces, kept so the inverse never goes through a generic solver.
    a: f64,
    diag: DVector<f64>,
}

impl InfoMetric {
    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    /// `g^{-1} = D^{-1} - A (D^{-1} n)(D^{-1} n)^T / (1 + A n^T D^{-1} n)`.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let d_inv = self.diag.map(|d| 1.0 / d);
        let s = d_inv.sum();
        let denom = 1.0 + self.a * s;
        if denom.abs() <= 1e-12 * (1.0 + (self.a * s).abs()) {
            return Err(Error::Singular(format!(
                "1 + A n^T D^-1 n = {denom:e} at |rho| = {}",
                self.rho.sum()
            )));
        }
        let mut inv = DMatrix::from_diagonal(&d_inv);
        if self.a != 0.0 {
            inv -= (&d_inv * d_inv.transpose()) * (self.a / denom);
        }
        Ok(inv)
    }
}

pub fn info_metric(rho: &[f64], params: &MetricParams) -> Result<InfoMetric> {
    check_interior(rho)?;
    let total: f64 = rho.iter().sum();
    let a = params.a(total);
    let b = params.b(total);
    if b.is_nan() || b <= 0.0 || !a.is_finite() {
        return Err(Error::Param(format!("need B(|rho|) > 0, got B({total}) = {b}")));
    }
    let n = rho.len();
    let diag = DVector::from_iterator(n, rho.iter().map(|&r| b / (2.0 * r)));
    let mut g = DMatrix::from_element(n, n, a);
    for i in 0..n {
        g[(i, i)] += diag[i];
    }
    Ok(InfoMetric { g, rho: DVector::from_column_slice(rho), a, diag })
}

/// `G = g (+) g^{-1}`: the bundle metric with no mixed `rho`/`pi` block.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceMetric {
    pub matrix: DMatrix<f64>,
    pub rho: DVector<f64>,
}

impl PhaseSpaceMetric {
    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn coordinate_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    pub fn momentum_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.matrix.view((n, n), (n, n)).into_owned()
    }

    /// `G(u, v)` for bundle tangent vectors of length `2n`.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(self.matrix.nrows(), u.len())?;
        check_dim(self.matrix.nrows(), v.len())?;
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        Ok(u.dot(&(&self.matrix * v)))
    }
}

fn block_diag(upper: &DMatrix<f64>, lower: &DMatrix<f64>) -> DMatrix<f64> {
    let n = upper.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(upper);
    m.view_mut((n, n), (n, n)).copy_from(lower);
    m
}

pub fn phase_space_metric(rho: &[f64], params: &MetricParams) -> Result<PhaseSpaceMetric> {
    let g = info_metric(rho, params)?;
    let g_inv = g.inverse()?;
    Ok(PhaseSpaceMetric { matrix: block_diag(&g.g, &g_inv), rho: g.rho })
}

/// The constant symplectic form `[[0, I], [-I, 0]]`.
pub fn symplectic_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
        m[(n + i, i)] = -1.0;
    }
    m
}

/// `Omega(u, v) = sum_i (u_rho_i v_pi_i - u_pi_i v_rho_i)`.
pub fn symplectic_eval(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dim(u.len(), v.len())?;
    if !u.len().is_multiple_of(2) {
        return Err(Error::Param(format!("tangent vectors must have even length, got {}", u.len())));
    }
    let n = u.len() / 2;
    Ok((0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum())
}

/// `J = -G^{-1} Omega`, which squares to minus the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    pub matrix: DMatrix<f64>,
    pub rho: DVector<f64>,
}

impl ComplexStructure {
    /// Largest entry of `|J J + I|`.
    pub fn square_defect(&self) -> f64 {
        let n2 = self.matrix.nrows();
        (&self.matrix * &self.matrix + DMatrix::<f64>::identity(n2, n2)).amax()
    }
}

pub fn complex_structure(rho: &[f64], params: &MetricParams) -> Result<ComplexStructure> {
    let g = info_metric(rho, params)?;
    let g_inv = g.inverse()?;
    // G^{-1} = g^{-1} (+) g
    let g_upper_inv = block_diag(&g_inv, &g.g);
    let matrix = -(g_upper_inv * symplectic_matrix(rho.len()));
    Ok(ComplexStructure { matrix, rho: g.rho })
}

/// Squared length of the displacement `(d_rho, d_pi)` under the bundle metric `G`.
pub fn embedding_length(rho: &[f64], drho: &[f64], dpi: &[f64], params: &MetricParams) -> Result<f64> {
    check_dim(rho.len(), drho.len())?;
    check_dim(rho.len(), dpi.len())?;
    let g = info_metric(rho, params)?;
    let g_inv = g.inverse()?;
    let dr = DVector::from_column_slice(drho);
    let dp = DVector::from_column_slice(dpi);
    Ok(dr.dot(&(&g.g * &dr)) + dp.dot(&(g_inv * &dp)))
}

/// Minimum of `G` over the gauge orbit `d_pi -> d_pi + nu n`, together with the minimizer.
///
/// The length is quadratic in `nu`, so the minimizer is
/// `nu* = -(n^T g^-1 d_pi) / (n^T g^-1 n)`. The minimum is evaluated at the shifted
/// displacement rather than by completing the square, which keeps it exactly
/// invariant under large constant shifts of `d_pi`. No normalization is required
/// here; see [`induced_metric_ts`] for the constrained version.
pub fn gauge_minimized_length(
    rho: &[f64],
    drho: &[f64],
    dpi: &[f64],
    params: &MetricParams,
) -> Result<(f64, f64)> {
    check_dim(rho.len(), drho.len())?;
    check_dim(rho.len(), dpi.len())?;
    let g = info_metric(rho, params)?;
    let g_inv = g.inverse()?;
    let n = rho.len();
    let ones = DVector::from_element(n, 1.0);
    let dp = DVector::from_column_slice(dpi);
    let g_inv_n = &g_inv * &ones;
    let nu = -g_inv_n.dot(&dp) / g_inv_n.sum();
    let w = dp.add_scalar(nu);
    let dr = DVector::from_column_slice(drho);
    Ok((dr.dot(&(&g.g * &dr)) + w.dot(&(g_inv * &w)), nu))
}

/// Induced metric on the normalized bundle: squared distance between neighbouring
/// gauge orbits.
pub fn induced_metric_ts(rho: &[f64], drho: &[f64], dpi: &[f64], params: &MetricParams) -> Result<f64> {
    check_dim(rho.len(), drho.len())?;
    check_dim(rho.len(), dpi.len())?;
    let total: f64 = rho.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization(format!("sum(rho) = {total}, expected 1")));
    }
    let dtotal: f64 = drho.iter().sum();
    if dtotal.abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization(format!("sum(d_rho) = {dtotal:e}, expected 0")));
    }
    gauge_minimized_length(rho, drho, dpi, params).map(|(len, _)| len)
}
