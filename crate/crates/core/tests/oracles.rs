mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

use sloppy_core::sloppiness::{
    eigendecompose, exponent_distance, extract_eigenparameters, format_terms, parse_display, SensitivityMatrix,
    MatrixKind,
};

fn ok(c: Check) {
    if let Err(e) = c {
        panic!("{e}");
    }
}

#[test]
fn l_equals_h_at_zero_residual() {
    ok(check_l_equals_h_at_zero_residual());
}

#[test]
fn g_reduces_to_average_hessian() {
    ok(check_g_is_average_hessian_under_identity_prior(5));
}

#[test]
fn g_single_particle_is_psi() {
    ok(check_g_single_particle());
}

#[test]
fn g_linear_gaussian_by_hand() {
    ok(check_g_linear_gaussian());
}

#[test]
fn smc_matches_conjugate_posterior() {
    ok(check_smc_conjugate(11, 2000));
}

#[test]
fn worked_eigenparameters() {
    ok(check_worked_eigenparameters());
}

#[test]
fn spectrum_examples() {
    ok(check_spectrum_examples());
}

#[test]
fn p_scale_invariance() {
    ok(check_p_scale_invariance(3));
}

#[test]
fn monte_carlo_precision_matches_closed_form() {
    // Gaussian toy posterior in log space with a known precision matrix.
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let prec = DMatrix::from_row_slice(3, 3, &[2.0, 0.6, 0.0, 0.6, 1.0, -0.3, 0.0, -0.3, 0.5]);
    let cov = prec.clone().try_inverse().unwrap();
    let l = cov.clone().cholesky().unwrap().l();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let particles: Vec<Vec<f64>> = (0..100_000)
        .map(|_| {
            let z = nalgebra::DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
            (&l * z).iter().map(|x: &f64| x.exp()).collect()
        })
        .collect();
    let n = particles.len();
    let ens = sloppy_core::inference::ParticleEnsemble::new(
        vec!["a".into(), "b".into(), "c".into()],
        0,
        particles,
        vec![0.0; n],
    )
    .unwrap();
    let p = sloppy_core::sloppiness::pca_matrix_p(&ens).unwrap();
    assert!(rel_diff(&p.values, &prec) < 0.02, "{}", p.values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hessian_matches_quadratic(seed in any::<u64>()) {
        prop_assert!(check_hessian_matches_quadratic(seed, 1e-3).is_ok());
    }

    #[test]
    fn l_is_psd(seed in any::<u64>()) {
        let r = check_l_is_psd(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn p_inverts_constructed_covariance(seed in any::<u64>()) {
        let r = check_p_inverts_known_covariance(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn eigendecomposition_reconstructs(entries in proptest::collection::vec(-10.0f64..10.0, 25)) {
        let a = DMatrix::from_row_slice(5, 5, &entries);
        let s = &a + a.transpose();
        let e = eigendecompose(&s).unwrap();
        prop_assert!(rel_diff(&e.reconstruct(), &s) < 1e-8);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..5 {
            let v = e.vector(k);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-10);
            let lead = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            prop_assert!(lead > 0.0);
        }
    }

    #[test]
    fn display_parses_back(v in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(n > 1e-6);
        let v: Vec<f64> = v.iter().map(|x| x / n).collect();
        let names: Vec<String> = ["k_cat", "[E_T]", "A_K1", "g_s"].iter().map(|s| s.to_string()).collect();
        if let Ok(eps) = extract_eigenparameters(&[v.clone()], &[1.0], &names, 0.2) {
            let e = &eps[0];
            let parsed = parse_display(&e.display).unwrap();
            prop_assert_eq!(format_terms(&parsed), e.display.clone());
            let max = e.terms.iter().map(|t| t.exponent.abs()).fold(0.0, f64::max);
            prop_assert!((max - 1.0).abs() < 1e-12);
            prop_assert!(e.terms.iter().any(|t| t.exponent == 1.0));
            for t in &e.terms {
                let raw = v[names.iter().position(|n| *n == t.name).unwrap()];
                prop_assert!(raw.abs() >= 0.2);
            }
        }
    }

    #[test]
    fn exponent_distance_is_sign_invariant(a in proptest::collection::vec(-1.0f64..1.0, 3),
                                           b in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let nb: Vec<f64> = b.iter().map(|x| -x).collect();
        prop_assert_eq!(exponent_distance(&a, &b), exponent_distance(&a, &nb));
        prop_assert_eq!(exponent_distance(&a, &a), 0.0);
    }

    #[test]
    fn sensitivity_matrix_is_symmetrised(entries in proptest::collection::vec(-5.0f64..5.0, 9)) {
        let a = DMatrix::from_row_slice(3, 3, &entries);
        let m = SensitivityMatrix::new(MatrixKind::H, a, vec!["x".into(), "y".into(), "z".into()], String::new()).unwrap();
        prop_assert_eq!(m.values.clone(), m.values.transpose());
    }
}
