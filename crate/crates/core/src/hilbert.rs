//! The complex chart `psi_i = sqrt(rho_i) exp(i pi_i)`, the inner product built
//! from the metric and symplectic form, and exact unitary propagation.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::flows::{poisson_bracket, HamiltonianSpec, PhasePoint, TangentVector};
use crate::geometry::NORMALIZATION_TOL;

/// Components with smaller modulus have no defined phase.
pub const PHASE_UNDEFINED_BELOW: f64 = 1e-15;

/// Tolerance for [`HermitianOperator::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A point of the bundle in complex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexState {
    psi: DVector<Complex64>,
}

impl ComplexState {
    pub fn new(psi: DVector<Complex64>) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::Param("state needs at least one component".into()));
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Param("state has non-finite components".into()));
        }
        Ok(Self { psi })
    }

    pub fn from_slice(psi: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(psi))
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.psi
    }

    /// `<psi|psi> = |rho|`.
    pub fn total_probability(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_probability() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Born rule: `rho_i = |psi_i|^2`.
    pub fn probabilities(&self) -> DVector<f64> {
        self.psi.map(|z| z.norm_sqr())
    }

    /// Global phase `psi -> exp(i nu) psi`, the gauge flow in complex form.
    pub fn phase_shifted(&self, nu: f64) -> Self {
        Self { psi: &self.psi * Complex64::from_polar(1.0, nu) }
    }

    /// Euclidean distance `||psi - phi||`.
    pub fn distance(&self, other: &ComplexState) -> f64 {
        (&self.psi - &other.psi).norm()
    }
}

pub fn to_complex(x: &PhasePoint) -> ComplexState {
    let psi = DVector::from_iterator(
        x.dim(),
        x.rho().iter().zip(x.pi().iter()).map(|(&r, &p)| {
            if r == 0.0 {
                Complex64::ZERO
            } else {
                Complex64::from_polar(r.sqrt(), p)
            }
        }),
    );
    ComplexState { psi }
}

/// Result of inverting the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub point: PhasePoint,
    /// Indices whose amplitude is below [`PHASE_UNDEFINED_BELOW`]; their `pi` is set to 0.
    pub undefined_phase: Vec<usize>,
}

/// `rho_i = |psi_i|^2`, `pi_i = arg psi_i` in `[0, 2 pi)`.
pub fn from_complex(psi: &ComplexState) -> ChartPoint {
    let mut undefined_phase = Vec::new();
    let mut rho = Vec::with_capacity(psi.dim());
    let mut pi = Vec::with_capacity(psi.dim());
    for (i, z) in psi.psi.iter().enumerate() {
        rho.push(z.norm_sqr());
        if z.norm() < PHASE_UNDEFINED_BELOW {
            undefined_phase.push(i);
            pi.push(0.0);
        } else {
            let arg = z.arg().rem_euclid(TAU);
            pi.push(if arg >= TAU { 0.0 } else { arg });
        }
    }
    let point = PhasePoint::new(rho, pi).expect("moduli and arguments are finite");
    ChartPoint { point, undefined_phase }
}

/// Pushes a real tangent vector at `x` through the chart:
/// `d psi_i = (d rho_i / (2 sqrt(rho_i)) + i sqrt(rho_i) d pi_i) exp(i pi_i)`.
pub fn chart_pushforward(x: &PhasePoint, v: &TangentVector) -> Result<DVector<Complex64>> {
    check_dim(x.dim(), v.dim())?;
    x.check_interior()?;
    let (dr, dp) = (v.d_rho(), v.d_pi());
    Ok(DVector::from_fn(x.dim(), |i, _| {
        let s = x.rho()[i].sqrt();
        Complex64::new(dr[i] / (2.0 * s), s * dp[i]) * Complex64::from_polar(1.0, x.pi()[i])
    }))
}

/// A Hermitian matrix `K = K^†`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Accepts `matrix` if `max |K - K^†| <= 1e-12 * max(1, max |K_ij|)`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        check_dim(matrix.nrows(), matrix.ncols())?;
        if matrix.is_empty() {
            return Err(Error::Param("operator must be non-empty".into()));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let deviation = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation.is_nan() || deviation > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        Self::new(DMatrix::from_row_iterator(n, n, entries.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// The bilinear Hamiltonian `psi^† K psi` generating this operator's flow.
    pub fn to_spec(&self) -> HamiltonianSpec {
        HamiltonianSpec::from_kernel(self.matrix.clone()).expect("operator is square")
    }

    /// `<psi|K|psi>`.
    pub fn expectation(&self, psi: &ComplexState) -> Result<Complex64> {
        check_dim(self.dim(), psi.dim())?;
        Ok(psi.psi.dotc(&(&self.matrix * &psi.psi)))
    }

    pub fn commutator(&self, other: &HermitianOperator) -> Result<DMatrix<Complex64>> {
        check_dim(self.dim(), other.dim())?;
        Ok(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }
}

impl TryFrom<&HamiltonianSpec> for HermitianOperator {
    type Error = Error;

    fn try_from(spec: &HamiltonianSpec) -> Result<Self> {
        if !spec.is_pure_kernel() {
            return Err(Error::Param("only a bare kernel defines a Hermitian operator".into()));
        }
        Self::new(spec.kernel().clone())
    }
}

/// `exp(-i K tau)` from one Hermitian eigendecomposition `K = V diag(lambda) V^†`.
#[derive(Debug, Clone)]
pub struct UnitaryPropagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl UnitaryPropagator {
    pub fn new(op: &HermitianOperator) -> Self {
        let eig = SymmetricEigen::new(op.matrix.clone());
        Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn apply(&self, psi0: &ComplexState, tau: f64) -> Result<ComplexState> {
        check_dim(self.dim(), psi0.dim())?;
        if tau == 0.0 {
            return Ok(psi0.clone());
        }
        let mut coeffs = self.eigenvectors.adjoint() * &psi0.psi;
        for (c, &lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -lambda * tau);
        }
        Ok(ComplexState { psi: &self.eigenvectors * coeffs })
    }

    pub fn matrix(&self, tau: f64) -> DMatrix<Complex64> {
        let phases = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * tau)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&phases) * self.eigenvectors.adjoint()
    }
}

/// Solution of `i d psi/d tau = K psi`.
pub fn propagate_unitary(op: &HermitianOperator, psi0: &ComplexState, tau: f64) -> Result<ComplexState> {
    UnitaryPropagator::new(op).apply(psi0, tau)
}

fn stacked(psi: &ComplexState) -> DVector<Complex64> {
    // psi^{mu i} = (psi_i, i psi_i^*)
    let n = psi.dim();
    DVector::from_fn(2 * n, |k, _| if k < n { psi.psi[k] } else { Complex64::i() * psi.psi[k - n].conj() })
}

/// `<psi|phi> = 1/2 (G + i Omega)_{mu i, nu j} psi^{mu i} phi^{nu j}` in the
/// stacked coordinates `(psi, i psi^*)`.
pub fn inner_product_tensor(psi: &ComplexState, phi: &ComplexState) -> Result<Complex64> {
    check_dim(psi.dim(), phi.dim())?;
    let t = psi_tensors(psi.dim());
    let form = (t.metric + t.symplectic * Complex64::i()) * Complex64::new(0.5, 0.0);
    Ok(stacked(psi).dot(&(form * stacked(phi))))
}

/// `<psi|phi> = sum_i psi_i^* phi_i`.
///
/// Debug builds also evaluate the tensor form and check the two agree.
pub fn inner_product(psi: &ComplexState, phi: &ComplexState) -> Result<Complex64> {
    check_dim(psi.dim(), phi.dim())?;
    let direct = psi.psi.dotc(&phi.psi);
    #[cfg(debug_assertions)]
    {
        let tensor = inner_product_tensor(psi, phi)?;
        let scale = 1.0 + psi.psi.norm() * phi.psi.norm();
        debug_assert!((tensor - direct).norm() <= 1e-13 * scale, "{tensor} vs {direct}");
    }
    Ok(direct)
}

/// `{U, V}` at `psi` computed in real coordinates, and `-i <psi|[U, V]|psi>`.
pub fn commutator_identity_check(
    u: &HermitianOperator,
    v: &HermitianOperator,
    psi: &ComplexState,
) -> Result<(f64, f64)> {
    check_dim(u.dim(), psi.dim())?;
    check_dim(v.dim(), psi.dim())?;
    let x = from_complex(psi).point;
    let lhs = poisson_bracket(&u.to_spec(), &v.to_spec(), &x)?;
    let comm = u.commutator(v)?;
    let rhs = -Complex64::i() * psi.psi.dotc(&(comm * &psi.psi));
    Ok((lhs, rhs.re))
}

/// A linear combination of two states and its total probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    pub state: ComplexState,
    pub total_probability: f64,
    pub normalized: bool,
}

pub fn superposition(c1: Complex64, psi1: &ComplexState, c2: Complex64, psi2: &ComplexState) -> Result<Superposition> {
    check_dim(psi1.dim(), psi2.dim())?;
    let state = ComplexState { psi: &psi1.psi * c1 + &psi2.psi * c2 };
    let total_probability = state.total_probability();
    Ok(Superposition { normalized: state.is_normalized(), state, total_probability })
}

/// Constant tensors of the complex chart, as `2n x 2n` matrices over the
/// stacked index `(mu, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTensors {
    pub metric: DMatrix<Complex64>,
    pub symplectic: DMatrix<Complex64>,
    pub complex_structure: DMatrix<Complex64>,
}

pub fn psi_tensors(n: usize) -> PsiTensors {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let mut metric = DMatrix::zeros(2 * n, 2 * n);
    let mut symplectic = DMatrix::zeros(2 * n, 2 * n);
    let mut metric_inv = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        metric[(k, n + k)] = -i;
        metric[(n + k, k)] = -i;
        metric_inv[(k, n + k)] = i;
        metric_inv[(n + k, k)] = i;
        symplectic[(k, n + k)] = one;
        symplectic[(n + k, k)] = -one;
    }
    let complex_structure = -(metric_inv * &symplectic);
    PsiTensors { metric, symplectic, complex_structure }
}
