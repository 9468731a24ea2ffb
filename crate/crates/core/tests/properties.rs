use hkflow_core::flows::{circular_difference, hamiltonian_vector_field};
use hkflow_core::geometry::{complex_structure, embedding_length, induced_metric_ts, info_metric, MetricParams};
use hkflow_core::hilbert::{chart_pushforward, inner_product, inner_product_tensor, propagate_unitary};
use hkflow_core::sampling::{random_hermitian, random_interior_point, random_state, random_tangent, rng};
use hkflow_core::{
    default_metric_families, from_complex, gauge_canonicalize, gauge_shift, integrate_midpoint, to_complex,
    HamiltonianSpec, PhasePoint,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = MetricParams> {
    (prop::collection::vec(-0.2..1.0f64, 0..3), prop::collection::vec(0.5..2.0f64, 1..3))
        .prop_map(|(a, b)| MetricParams::new(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complex_structure_squares_to_minus_identity(seed in any::<u64>(), n in 2usize..9, params in params_strategy()) {
        let x = random_interior_point(&mut rng(seed), n);
        let j = complex_structure(x.rho().as_slice(), &params).unwrap();
        prop_assert!(j.square_defect() <= 1e-12, "{}", j.square_defect());
    }

    #[test]
    fn info_metric_is_symmetric_positive_definite(seed in any::<u64>(), n in 2usize..9, params in params_strategy()) {
        let x = random_interior_point(&mut rng(seed), n);
        let g = info_metric(x.rho().as_slice(), &params).unwrap().g;
        prop_assert!((&g - g.transpose()).amax() == 0.0);
        prop_assert!(g.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn induced_metric_ignores_gauge_direction(seed in any::<u64>(), n in 2usize..7, c in -5.0..5.0f64) {
        let mut r = rng(seed);
        let x = random_interior_point(&mut r, n);
        let (drho, dpi) = random_tangent(&mut r, n);
        let shifted = dpi.add_scalar(c);
        let p = MetricParams::canonical();
        let base = induced_metric_ts(x.rho().as_slice(), drho.as_slice(), dpi.as_slice(), &p).unwrap();
        let moved = induced_metric_ts(x.rho().as_slice(), drho.as_slice(), shifted.as_slice(), &p).unwrap();
        prop_assert!((base - moved).abs() <= 1e-12 * base.abs());
    }

    #[test]
    fn embedding_bounds_induced(seed in any::<u64>(), n in 2usize..7, params in params_strategy()) {
        let mut r = rng(seed);
        let x = random_interior_point(&mut r, n);
        let (drho, dpi) = random_tangent(&mut r, n);
        let rho = x.rho().as_slice();
        let emb = embedding_length(rho, drho.as_slice(), dpi.as_slice(), &params).unwrap();
        let ind = induced_metric_ts(rho, drho.as_slice(), dpi.as_slice(), &params).unwrap();
        prop_assert!(emb >= ind - 1e-12 * emb);
    }

    #[test]
    fn induced_metric_is_ab_independent(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let x = random_interior_point(&mut r, n);
        let (drho, dpi) = random_tangent(&mut r, n);
        let vals: Vec<f64> = default_metric_families()
            .iter()
            .map(|p| induced_metric_ts(x.rho().as_slice(), drho.as_slice(), dpi.as_slice(), p).unwrap())
            .collect();
        let spread = vals.iter().copied().fold(f64::MIN, f64::max) - vals.iter().copied().fold(f64::MAX, f64::min);
        prop_assert!(spread <= 1e-9 * vals[0].abs());
    }

    #[test]
    fn barycenter_metric_is_permutation_invariant(n in 2usize..9, params in params_strategy(), shift in 1usize..8) {
        let rho = vec![1.0 / n as f64; n];
        let g = info_metric(&rho, &params).unwrap().g;
        let perm = |i: usize| (i + shift) % n;
        let permuted = DMatrix::from_fn(n, n, |i, j| g[(perm(i), perm(j))]);
        prop_assert!((permuted - g).amax() == 0.0);
    }

    #[test]
    fn canonical_representative_is_idempotent_and_gauge_blind(seed in any::<u64>(), n in 2usize..7, nu in -3.0..3.0f64) {
        let x = random_interior_point(&mut rng(seed), n);
        let c = gauge_canonicalize(&x);
        prop_assert!(c.rho().dot(c.pi()).abs() <= 1e-12);
        prop_assert!(gauge_canonicalize(&c).distance_max(&c) <= 1e-12);
        prop_assert!(gauge_canonicalize(&gauge_shift(&x, nu)).distance_max(&c) <= 1e-12);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let psi = random_state(&mut r, n);
        let phi = random_state(&mut r, n);
        let ab = inner_product(&psi, &phi).unwrap();
        prop_assert_eq!(ab.conj(), inner_product(&phi, &psi).unwrap());
        prop_assert!((inner_product_tensor(&psi, &phi).unwrap() - ab).norm() <= 1e-13);
    }

    #[test]
    fn propagation_obeys_born_rule_and_gauge_equivariance(
        seed in any::<u64>(), n in 2usize..6, tau in -4.0..4.0f64, nu in -3.0..3.0f64
    ) {
        let mut r = rng(seed);
        let k = random_hermitian(&mut r, n);
        let psi0 = random_state(&mut r, n);
        let out = propagate_unitary(&k, &psi0, tau).unwrap();
        let chart = from_complex(&out).point;
        for (rho, z) in chart.rho().iter().zip(out.amplitudes().iter()) {
            prop_assert!((rho - z.norm_sqr()).abs() <= 1e-12);
        }
        prop_assert!((chart.total_probability() - psi0.total_probability()).abs() <= 1e-13);
        let shifted = propagate_unitary(&k, &psi0.phase_shifted(nu), tau).unwrap();
        prop_assert!(shifted.distance(&out.phase_shifted(nu)) <= 1e-13);
    }

    #[test]
    fn hamiltonian_field_pushes_forward_to_schrodinger(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let k = random_hermitian(&mut r, n);
        let x = random_interior_point(&mut r, n);
        let v = hamiltonian_vector_field(&k.to_spec(), &x).unwrap();
        let expected = (k.matrix() * to_complex(&x).amplitudes()) * Complex64::new(0.0, -1.0);
        prop_assert!((chart_pushforward(&x, &v).unwrap() - &expected).camax() <= 1e-10);

        // finite-difference chart Jacobian, independent of the analytic pushforward
        let h = 1e-6;
        let coords = x.coordinates();
        let plus = PhasePoint::from_coordinates(&(&coords + &v.components * h)).unwrap();
        let minus = PhasePoint::from_coordinates(&(&coords - &v.components * h)).unwrap();
        let fd = (to_complex(&plus).amplitudes() - to_complex(&minus).amplitudes()) / Complex64::new(2.0 * h, 0.0);
        prop_assert!((fd - expected).camax() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn real_symmetric_kernels_are_time_reversible(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let re = random_hermitian(&mut r, n).matrix().map(|z| z.re);
        let entries: Vec<f64> = re.transpose().as_slice().to_vec();
        let negated: Vec<f64> = entries.iter().map(|e| -e).collect();
        let forward = HamiltonianSpec::from_real_kernel(n, &entries).unwrap();
        let backward = HamiltonianSpec::from_real_kernel(n, &negated).unwrap();

        // (rho(-t), -pi(-t)) from x0 against the forward flow of (rho0, -pi0)
        let x0 = random_interior_point(&mut r, n);
        let reversed0 = PhasePoint::new(x0.rho().as_slice().to_vec(), x0.pi().iter().map(|p| -p).collect()).unwrap();
        let back = integrate_midpoint(&backward, &x0, 1e-3, 200).unwrap();
        let fwd = integrate_midpoint(&forward, &reversed0, 1e-3, 200).unwrap();
        for (b, f) in back.points.iter().zip(&fwd.points) {
            prop_assert!((b.rho() - f.rho()).amax() <= 1e-11);
            for (pb, pf) in b.pi().iter().zip(f.pi().iter()) {
                prop_assert!(circular_difference(-pb, *pf).abs() <= 1e-11);
            }
        }
    }
}
