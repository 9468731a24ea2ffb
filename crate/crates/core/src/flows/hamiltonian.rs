use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::point::{PhasePoint, TangentVector};
use super::VectorField;
use crate::error::{check_dim, Error, Result};
use crate::geometry::check_interior;

/// Largest imaginary part tolerated by [`eval_hamiltonian`].
pub const REALNESS_TOL: f64 = 1e-9;

/// A smooth real function on the bundle with closed-form first derivatives.
pub trait PhaseFunction {
    fn value_at(&self, rho: &[f64], pi: &[f64]) -> Result<f64>;
    fn gradient_at(&self, rho: &[f64], pi: &[f64]) -> Result<Gradient>;

    fn value(&self, x: &PhasePoint) -> Result<f64> {
        self.value_at(x.rho().as_slice(), x.pi().as_slice())
    }

    fn gradient(&self, x: &PhasePoint) -> Result<Gradient> {
        self.gradient_at(x.rho().as_slice(), x.pi().as_slice())
    }
}

/// Partial derivatives `(dF/d rho, dF/d pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub d_rho: DVector<f64>,
    pub d_pi: DVector<f64>,
}

/// Coordinate functions `rho_i` and `pi_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Rho(usize),
    Pi(usize),
}

impl PhaseFunction for Coordinate {
    fn value_at(&self, rho: &[f64], pi: &[f64]) -> Result<f64> {
        match *self {
            Coordinate::Rho(i) => rho.get(i).copied(),
            Coordinate::Pi(i) => pi.get(i).copied(),
        }
        .ok_or(Error::Dimension { expected: self.index() + 1, found: rho.len() })
    }

    fn gradient_at(&self, rho: &[f64], _pi: &[f64]) -> Result<Gradient> {
        let n = rho.len();
        if self.index() >= n {
            return Err(Error::Dimension { expected: self.index() + 1, found: n });
        }
        let mut d_rho = DVector::zeros(n);
        let mut d_pi = DVector::zeros(n);
        match *self {
            Coordinate::Rho(i) => d_rho[i] = 1.0,
            Coordinate::Pi(i) => d_pi[i] = 1.0,
        }
        Ok(Gradient { d_rho, d_pi })
    }
}

impl Coordinate {
    fn index(&self) -> usize {
        match *self {
            Coordinate::Rho(i) | Coordinate::Pi(i) => i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearKind {
    /// `sum_i rho_i^2`, evaluated on the real side.
    SumRhoSquared,
    /// `sum_i (psi_i^* psi_i)^2`, evaluated on the complex side.
    QuarticPsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearTerm {
    pub kind: NonlinearKind,
    pub strength: f64,
}

/// `K(psi, psi*) = psi^† K psi + sum_i (psi_i^* L_i + M_i psi_i) + c`, plus an
/// optional nonlinear term from a fixed catalog.
///
/// The flow is generated by the real part of this expression. For a Hermitian
/// kernel with `M = L^*` the imaginary part vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    kernel: DMatrix<Complex64>,
    linear_bra: DVector<Complex64>,
    linear_ket: DVector<Complex64>,
    constant: f64,
    nonlinear: Option<NonlinearTerm>,
}

impl HamiltonianSpec {
    pub fn from_kernel(kernel: DMatrix<Complex64>) -> Result<Self> {
        check_dim(kernel.nrows(), kernel.ncols())?;
        let n = kernel.nrows();
        if n == 0 {
            return Err(Error::Param("kernel must be non-empty".into()));
        }
        Ok(Self {
            kernel,
            linear_bra: DVector::zeros(n),
            linear_ket: DVector::zeros(n),
            constant: 0.0,
            nonlinear: None,
        })
    }

    pub fn from_real_kernel(n: usize, entries: &[f64]) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        Self::from_kernel(DMatrix::from_row_iterator(n, n, entries.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    pub fn zero(n: usize) -> Self {
        Self::from_kernel(DMatrix::zeros(n, n)).expect("square kernel")
    }

    /// The constraint `N = 1 - |rho|`, whose flow shifts every momentum equally.
    pub fn normalization(n: usize) -> Self {
        let kernel = DMatrix::from_diagonal_element(n, n, Complex64::new(-1.0, 0.0));
        Self::from_kernel(kernel).expect("square kernel").with_constant(1.0)
    }

    /// A nonlinear catalog term on its own, with zero kernel.
    pub fn nonlinear_control(n: usize, kind: NonlinearKind, strength: f64) -> Self {
        Self::zero(n).with_nonlinear(NonlinearTerm { kind, strength })
    }

    pub fn with_linear(mut self, bra: DVector<Complex64>, ket: DVector<Complex64>) -> Result<Self> {
        check_dim(self.dim(), bra.len())?;
        check_dim(self.dim(), ket.len())?;
        self.linear_bra = bra;
        self.linear_ket = ket;
        Ok(self)
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn with_nonlinear(mut self, term: NonlinearTerm) -> Self {
        self.nonlinear = Some(term);
        self
    }

    pub fn dim(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    pub fn linear_bra(&self) -> &DVector<Complex64> {
        &self.linear_bra
    }

    pub fn linear_ket(&self) -> &DVector<Complex64> {
        &self.linear_ket
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn nonlinear(&self) -> Option<NonlinearTerm> {
        self.nonlinear
    }

    pub fn has_linear_terms(&self) -> bool {
        self.linear_bra.iter().chain(self.linear_ket.iter()).any(|z| *z != Complex64::ZERO)
    }

    /// `max |K - K^†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.kernel - self.kernel.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when the spec is a bare kernel: no linear terms and no nonlinear term.
    pub fn is_pure_kernel(&self) -> bool {
        !self.has_linear_terms() && self.nonlinear.is_none()
    }

    fn amplitudes(rho: &[f64], pi: &[f64]) -> DVector<Complex64> {
        DVector::from_iterator(
            rho.len(),
            rho.iter().zip(pi).map(|(&r, &p)| Complex64::from_polar(r.sqrt(), p)),
        )
    }

    fn check_point(&self, rho: &[f64], pi: &[f64]) -> Result<()> {
        check_dim(self.dim(), rho.len())?;
        check_dim(self.dim(), pi.len())
    }

    /// Complex value of the spec at `psi(rho, pi)`; the flow uses its real part.
    pub fn evaluate_at(&self, rho: &[f64], pi: &[f64]) -> Result<Complex64> {
        self.check_point(rho, pi)?;
        let psi = Self::amplitudes(rho, pi);
        let mut value = psi.dotc(&(&self.kernel * &psi));
        value += psi.dotc(&self.linear_bra) + self.linear_ket.dot(&psi);
        value += self.constant;
        if let Some(term) = self.nonlinear {
            let s: f64 = match term.kind {
                NonlinearKind::SumRhoSquared => rho.iter().map(|r| r * r).sum(),
                NonlinearKind::QuarticPsi => psi.iter().map(|z| z.norm_sqr().powi(2)).sum(),
            };
            value += term.strength * s;
        }
        Ok(value)
    }
}

impl PhaseFunction for HamiltonianSpec {
    fn value_at(&self, rho: &[f64], pi: &[f64]) -> Result<f64> {
        self.evaluate_at(rho, pi).map(|z| z.re)
    }

    /// Chain rule through `psi_i = sqrt(rho_i) exp(i pi_i)`:
    /// `dF/d rho_i = (a_i psi_i + b_i psi_i^*) / (2 rho_i)` and
    /// `dF/d pi_i = i (a_i psi_i - b_i psi_i^*)`, with the Wirtinger derivatives
    /// `a = dF/d psi`, `b = dF/d psi^*`. The real part is taken at the end.
    fn gradient_at(&self, rho: &[f64], pi: &[f64]) -> Result<Gradient> {
        self.check_point(rho, pi)?;
        check_interior(rho)?;
        let n = self.dim();
        let psi = Self::amplitudes(rho, pi);
        let mut a = self.kernel.transpose() * psi.conjugate() + &self.linear_ket;
        let mut b = &self.kernel * &psi + &self.linear_bra;
        let mut d_rho_extra = DVector::zeros(n);
        if let Some(term) = self.nonlinear {
            match term.kind {
                NonlinearKind::SumRhoSquared => {
                    d_rho_extra = DVector::from_iterator(n, rho.iter().map(|r| 2.0 * term.strength * r));
                }
                NonlinearKind::QuarticPsi => {
                    for i in 0..n {
                        let w = 2.0 * term.strength * psi[i].norm_sqr();
                        a[i] += psi[i].conj() * w;
                        b[i] += psi[i] * w;
                    }
                }
            }
        }
        let mut d_rho = DVector::zeros(n);
        let mut d_pi = DVector::zeros(n);
        for i in 0..n {
            let phase = Complex64::from_polar(1.0, pi[i]);
            let s = rho[i].sqrt();
            d_rho[i] = (a[i] * phase + b[i] * phase.conj()).re / (2.0 * s) + d_rho_extra[i];
            d_pi[i] = (Complex64::i() * (a[i] * psi[i] - b[i] * psi[i].conj())).re;
        }
        Ok(Gradient { d_rho, d_pi })
    }
}

/// Real and imaginary parts of `K(psi, psi*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianValue {
    pub value: f64,
    pub imaginary_residue: f64,
}

/// Evaluates the spec, failing with [`Error::NotReal`] if the imaginary residue
/// exceeds [`REALNESS_TOL`].
pub fn eval_hamiltonian(spec: &HamiltonianSpec, x: &PhasePoint) -> Result<HamiltonianValue> {
    x.check_interior()?;
    let z = spec.evaluate_at(x.rho().as_slice(), x.pi().as_slice())?;
    if z.im.abs() > REALNESS_TOL {
        return Err(Error::NotReal { residue: z.im.abs() });
    }
    Ok(HamiltonianValue { value: z.re, imaginary_residue: z.im.abs() })
}

/// `(dH/d pi, -dH/d rho)`.
pub fn hamiltonian_vector_field<F: PhaseFunction + ?Sized>(f: &F, x: &PhasePoint) -> Result<TangentVector> {
    f.field(x)
}

/// `{A, B} = sum_i (dA/d rho_i dB/d pi_i - dA/d pi_i dB/d rho_i)`.
pub fn poisson_bracket<A, B>(a: &A, b: &B, x: &PhasePoint) -> Result<f64>
where
    A: PhaseFunction + ?Sized,
    B: PhaseFunction + ?Sized,
{
    let ga = a.gradient(x)?;
    let gb = b.gradient(x)?;
    Ok(ga.d_rho.dot(&gb.d_pi) - ga.d_pi.dot(&gb.d_rho))
}

/// `sum_i dH/d pi_i`, the rate of change of `|rho|` along the flow.
pub fn check_normalization_generator<F: PhaseFunction + ?Sized>(f: &F, x: &PhasePoint) -> Result<f64> {
    Ok(f.gradient(x)?.d_pi.sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_x() -> HamiltonianSpec {
        HamiltonianSpec::from_real_kernel(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn sigma_z() -> HamiltonianSpec {
        HamiltonianSpec::from_real_kernel(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    fn pt(rho: &[f64], pi: &[f64]) -> PhasePoint {
        PhasePoint::new(rho.to_vec(), pi.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let id = HamiltonianSpec::from_real_kernel(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let v = eval_hamiltonian(&id, &pt(&[0.5, 0.5], &[0.3, 2.0])).unwrap();
        assert_abs_diff_eq!(v.value, 1.0, epsilon = 1e-15);

        for pi in [[0.0, 0.0], [1.0, -2.0], [4.0, 0.5]] {
            let v = eval_hamiltonian(&sigma_z(), &pt(&[0.9, 0.1], &pi)).unwrap();
            assert_abs_diff_eq!(v.value, 0.8, epsilon = 1e-15);
            assert!(v.imaginary_residue <= 1e-12);
        }

        let upper = HamiltonianSpec::from_real_kernel(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let err = eval_hamiltonian(&upper, &pt(&[0.3, 0.7], &[0.4, 1.1])).unwrap_err();
        assert!(matches!(err, Error::NotReal { .. }));
    }

    #[test]
    fn vector_field_examples() {
        let x = pt(&[0.3, 0.7], &[0.2, 1.9]);
        let f = hamiltonian_vector_field(&HamiltonianSpec::normalization(2), &x).unwrap();
        assert_abs_diff_eq!(f.components.as_slice(), [0.0, 0.0, 1.0, 1.0].as_slice(), epsilon = 1e-15);

        let id = HamiltonianSpec::from_real_kernel(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let f = hamiltonian_vector_field(&id, &x).unwrap();
        assert_abs_diff_eq!(f.components.as_slice(), [0.0, 0.0, -1.0, -1.0].as_slice(), epsilon = 1e-15);

        // H = 2 sqrt(rho1 rho2) cos(pi1 - pi2)
        let f = hamiltonian_vector_field(&sigma_x(), &pt(&[0.5, 0.5], &[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(f.components.as_slice(), [0.0, 0.0, -1.0, -1.0].as_slice(), epsilon = 1e-15);
    }

    #[test]
    fn sigma_x_field_matches_hand_derivative() {
        let (r1, r2, p1, p2) = (0.3_f64, 0.7_f64, 0.4_f64, 1.3_f64);
        let d = p1 - p2;
        let expected = [
            -2.0 * (r1 * r2).sqrt() * d.sin(),
            2.0 * (r1 * r2).sqrt() * d.sin(),
            -(r2 / r1).sqrt() * d.cos(),
            -(r1 / r2).sqrt() * d.cos(),
        ];
        let f = hamiltonian_vector_field(&sigma_x(), &pt(&[r1, r2], &[p1, p2])).unwrap();
        assert_abs_diff_eq!(f.components.as_slice(), expected.as_slice(), epsilon = 1e-14);
    }

    #[test]
    fn bracket_examples() {
        let x = pt(&[0.5, 0.5], &[0.0, std::f64::consts::FRAC_PI_2]);
        let b = poisson_bracket(&sigma_x(), &sigma_z(), &x).unwrap();
        assert_abs_diff_eq!(b, -2.0, epsilon = 1e-14);
        assert_eq!(poisson_bracket(&sigma_x(), &sigma_x(), &x).unwrap(), 0.0);

        let h = HamiltonianSpec::from_kernel(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.0), c(1.0, -2.0), c(1.0, 2.0), c(-0.7, 0.0)],
        ))
        .unwrap();
        let y = pt(&[0.35, 0.65], &[2.0, -0.4]);
        let nb = poisson_bracket(&HamiltonianSpec::normalization(2), &h, &y).unwrap();
        assert!(nb.abs() <= 1e-14);
    }

    #[test]
    fn canonical_brackets() {
        let x = pt(&[0.2, 0.3, 0.5], &[0.1, 0.2, 0.3]);
        for i in 0..3 {
            for j in 0..3 {
                let rp = poisson_bracket(&Coordinate::Rho(i), &Coordinate::Pi(j), &x).unwrap();
                assert_eq!(rp, if i == j { 1.0 } else { 0.0 });
                assert_eq!(poisson_bracket(&Coordinate::Rho(i), &Coordinate::Rho(j), &x).unwrap(), 0.0);
                assert_eq!(poisson_bracket(&Coordinate::Pi(i), &Coordinate::Pi(j), &x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn normalization_generator_examples() {
        let x = pt(&[0.25, 0.75], &[0.9, 2.2]);
        let h = HamiltonianSpec::from_kernel(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(2.0, 0.0)],
        ))
        .unwrap();
        assert!(check_normalization_generator(&h, &x).unwrap().abs() <= 1e-12);

        // Re(psi_1^*) = sqrt(rho_1) cos(pi_1): d/d pi_1 = -sqrt(rho_1) sin(pi_1)
        let lin = HamiltonianSpec::zero(2)
            .with_linear(DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]), DVector::zeros(2))
            .unwrap();
        let g = check_normalization_generator(&lin, &x).unwrap();
        assert_abs_diff_eq!(g, -(0.25f64).sqrt() * 0.9f64.sin(), epsilon = 1e-15);

        assert_eq!(check_normalization_generator(&HamiltonianSpec::normalization(2), &x).unwrap(), 0.0);
    }

    #[test]
    fn nonlinear_catalog_paths_agree() {
        let x = pt(&[0.1, 0.6, 0.3], &[0.5, 1.5, 2.5]);
        let real = HamiltonianSpec::nonlinear_control(3, NonlinearKind::SumRhoSquared, 1.5);
        let cplx = HamiltonianSpec::nonlinear_control(3, NonlinearKind::QuarticPsi, 1.5);
        assert_abs_diff_eq!(real.value(&x).unwrap(), cplx.value(&x).unwrap(), epsilon = 1e-15);
        let (gr, gc) = (real.gradient(&x).unwrap(), cplx.gradient(&x).unwrap());
        assert_abs_diff_eq!(gr.d_rho, gc.d_rho, epsilon = 1e-14);
        assert_abs_diff_eq!(gc.d_pi, DVector::zeros(3), epsilon = 1e-15);
    }

    #[test]
    fn linear_terms_real_when_ket_is_conjugate_of_bra() {
        let l = DVector::from_vec(vec![c(0.3, -0.2), c(FRAC_1_SQRT_2, 1.0)]);
        let spec = sigma_x().with_linear(l.clone(), l.conjugate()).unwrap();
        let v = eval_hamiltonian(&spec, &pt(&[0.4, 0.6], &[1.0, 2.0])).unwrap();
        assert!(v.imaginary_residue <= 1e-15);
    }

    #[test]
    fn gradient_rejects_boundary_points() {
        let x = pt(&[1.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(sigma_x().gradient(&x), Err(Error::Boundary { index: 1, .. })));
    }
}
