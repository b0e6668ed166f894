//! Oracle checks shared by the oracle tests and the acceptance target.
//!
//! Each check returns `Err(description)` instead of panicking so the
//! acceptance runner can report every failure in one pass.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sloppy_core::data::{Dataset, NoiseSpec, ObservationGrid};
use sloppy_core::inference::{smc_sample, LogLikelihood, ModelLikelihood, PriorComponent, PriorSpec, SmcConfig};
use sloppy_core::inference::ParticleEnsemble;
use sloppy_core::model::Model;
use sloppy_core::models::MichaelisMenten;
use sloppy_core::sloppiness::{
    build_report, eigendecompose, extract_eigenparameters, hessian_h, lis_matrix_g, lm_hessian_l, log_hessian,
    parse_display, pca_matrix_p, LisOptions, MatrixKind, SensitivityMatrix,
};

pub type Check = Result<(), String>;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `ln L = -½ (x-μ)ᵀ A (x-μ)` with `x = ln θ`; the log-Hessian is exactly `A`.
pub struct QuadraticInLog {
    pub mu: Vec<f64>,
    pub a: DMatrix<f64>,
}

impl LogLikelihood for QuadraticInLog {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn log_likelihood(&self, theta: &[f64]) -> sloppy_core::Result<f64> {
        let r = nalgebra::DVector::from_iterator(
            theta.len(),
            theta.iter().zip(&self.mu).map(|(t, m)| t.ln() - m),
        );
        Ok(-0.5 * (r.transpose() * &self.a * &r)[(0, 0)])
    }
}

/// Random symmetric positive-definite matrix with entries of order one.
pub fn random_spd(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
    b.transpose() * &b + DMatrix::identity(d, d) * 0.1
}

pub fn check_hessian_matches_quadratic(seed: u64, delta: f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..6);
    let lik = QuadraticInLog {
        mu: (0..d).map(|_| rng.random_range(-3.0..3.0)).collect(),
        a: random_spd(d, &mut rng),
    };
    let theta: Vec<f64> = lik.mu.iter().map(|m| (m + rng.random_range(-1.0..1.0)).exp()).collect();
    let h = hessian_h(&lik, &theta, delta).map_err(|e| e.to_string())?;
    let err = rel_diff(&h.values, &lik.a);
    ensure(err <= 10.0 * delta * delta, || {
        format!("H vs analytic: relative error {err:.3e} exceeds {:.1e} (seed {seed})", 10.0 * delta * delta)
    })
}

/// Michaelis–Menten with additive noise, observed exactly at `theta`.
pub fn noiseless_mm(sigma: f64) -> (MichaelisMenten, Dataset, Vec<f64>) {
    let model = MichaelisMenten::new();
    let theta = model.spec().reference_vector().0;
    let grid = ObservationGrid::scalar(&[10.0, 50.0, 100.0, 150.0, 300.0, 600.0, 1500.0], 0).unwrap();
    let y = model.predict(&theta, &grid).unwrap();
    let ds = Dataset::new(grid, y, NoiseSpec::Homoscedastic { sigma }, None).unwrap();
    let mut full = theta;
    full.push(sigma);
    (model, ds, full)
}

pub fn check_l_equals_h_at_zero_residual() -> Check {
    let (model, ds, theta) = noiseless_mm(0.5);
    let lik = ModelLikelihood::new(&model, &ds);
    let h = hessian_h(&lik, &theta, 1e-3).map_err(|e| e.to_string())?;
    let l = lm_hessian_l(&lik, &theta, 1e-3).map_err(|e| e.to_string())?;
    let err = rel_diff(&h.values, &l.values);
    ensure(err < 1e-4, || format!("H and L differ by {err:.3e} at a zero-residual optimum"))
}

pub fn check_l_is_psd(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (model, ds, mut theta) = noiseless_mm(0.5);
    for t in theta.iter_mut().take(3) {
        *t *= rng.random_range(0.2..5.0);
    }
    let lik = ModelLikelihood::new(&model, &ds);
    let l = lm_hessian_l(&lik, &theta, 1e-3).map_err(|e| e.to_string())?;
    let min = l.values.clone().symmetric_eigen().eigenvalues.min();
    ensure(min >= -1e-10 * max_abs(&l.values).max(1.0), || {
        format!("L has eigenvalue {min:e} (seed {seed})")
    })
}

/// Ensemble whose log-space sample covariance is exactly `cov` (up to rounding):
/// `2d` points at `μ ± a·C^{1/2} eᵢ`.
pub fn ensemble_with_covariance(mu: &[f64], cov: &DMatrix<f64>) -> ParticleEnsemble {
    let d = mu.len();
    let chol = cov.clone().cholesky().expect("covariance must be positive definite").l();
    let a = ((2 * d - 1) as f64 / 2.0).sqrt();
    let mut particles = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            particles.push((0..d).map(|k| (mu[k] + s * a * chol[(k, i)]).exp()).collect());
        }
    }
    let names = (0..d).map(|i| format!("p{i}")).collect();
    ParticleEnsemble::new(names, 0, particles, vec![0.0; 2 * d]).unwrap()
}

pub fn check_p_inverts_known_covariance(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..6);
    let cov = random_spd(d, &mut rng);
    let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let p = pca_matrix_p(&ensemble_with_covariance(&mu, &cov)).map_err(|e| e.to_string())?;
    let want = cov.clone().try_inverse().unwrap();
    let err = rel_diff(&p.values, &want);
    ensure(err < 1e-8, || format!("P vs exact precision: relative error {err:.3e} (seed {seed})"))
}

pub fn check_p_scale_invariance(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 4;
    let cov = random_spd(d, &mut rng);
    let ens = ensemble_with_covariance(&[0.0; 4], &cov);
    let c: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..100.0)).collect();
    let scaled: Vec<Vec<f64>> = ens
        .particles()
        .iter()
        .map(|p| p.iter().zip(&c).map(|(v, k)| v * k).collect())
        .collect();
    let ens2 = ParticleEnsemble::new(ens.names().to_vec(), 0, scaled, ens.log_likelihoods().to_vec()).unwrap();
    let a = eigendecompose(&pca_matrix_p(&ens).unwrap().values).unwrap().values;
    let b = eigendecompose(&pca_matrix_p(&ens2).unwrap().values).unwrap().values;
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / x.abs()).fold(0.0, f64::max);
    ensure(err < 1e-10, || format!("P eigenvalues moved by {err:.3e} under rescaling"))
}

fn unit_log_normal_prior(names: &[String]) -> PriorSpec {
    let comps = names.iter().map(|n| PriorComponent::log_normal(n, 1.0, 1.0)).collect();
    PriorSpec::new(names.to_vec(), comps).unwrap()
}

pub fn check_g_is_average_hessian_under_identity_prior(seed: u64) -> Check {
    let (model, ds, theta) = noiseless_mm(0.5);
    let lik = ModelLikelihood::new(&model, &ds);
    let names = lik.names();
    let prior = unit_log_normal_prior(&names);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let particles: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            let mut p = theta.clone();
            for v in p.iter_mut().take(3) {
                *v *= rng.random_range(0.5..2.0);
            }
            p
        })
        .collect();
    let ens = ParticleEnsemble::new(names, 1, particles.clone(), vec![0.0; particles.len()]).unwrap();
    let g = lis_matrix_g(&ens, &prior, &lik, &LisOptions::default()).map_err(|e| e.to_string())?;
    let mut avg = DMatrix::zeros(3, 3);
    for p in &particles {
        avg += log_hessian(&lik, p, 1e-3).unwrap();
    }
    avg /= particles.len() as f64;
    let err = rel_diff(&g.values, &avg);
    ensure(err < 1e-12, || format!("G vs averaged Hessian: relative error {err:.3e}"))
}

pub fn check_g_single_particle() -> Check {
    let (model, ds, theta) = noiseless_mm(0.5);
    let lik = ModelLikelihood::new(&model, &ds);
    let names = lik.names();
    let comps = vec![
        PriorComponent::log_normal(&names[0], 100.0, 0.3),
        PriorComponent::log_normal(&names[1], 5.0, 2.0),
        PriorComponent::log_normal(&names[2], 146.7, 0.7),
        PriorComponent::log_normal(&names[3], 0.5, 0.5),
    ];
    let prior = PriorSpec::new(names.clone(), comps).unwrap();
    let ens = ParticleEnsemble::new(names, 1, vec![theta.clone()], vec![0.0]).unwrap();
    let g = lis_matrix_g(&ens, &prior, &lik, &LisOptions::default()).map_err(|e| e.to_string())?;
    let lp = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, 2.0, 0.7]));
    let want = &lp * log_hessian(&lik, &theta, 1e-3).unwrap() * &lp;
    let err = rel_diff(&g.values, &want);
    ensure(err < 1e-14, || format!("single-particle G differs from Ψ by {err:.3e}"))
}

pub fn check_g_linear_gaussian() -> Check {
    let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
    let lik = QuadraticInLog {
        mu: vec![0.5, -1.0, 2.0],
        a: a.clone(),
    };
    let names = lik.names();
    let sds = [0.5, 1.5, 3.0];
    let comps = names
        .iter()
        .zip(sds)
        .map(|(n, s)| PriorComponent::log_normal(n, 1.0, s))
        .collect();
    let prior = PriorSpec::new(names.clone(), comps).unwrap();
    let particles = vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.1, 7.0], vec![9.0, 1.0, 1.0]];
    let ens = ParticleEnsemble::new(names, 0, particles, vec![0.0; 3]).unwrap();
    let g = lis_matrix_g(&ens, &prior, &lik, &LisOptions::default()).map_err(|e| e.to_string())?;
    // Hand product diag(s)·A·diag(s).
    let want = DMatrix::from_fn(3, 3, |i, j| sds[i] * a[(i, j)] * sds[j]);
    let err = rel_diff(&g.values, &want);
    ensure(err < 1e-5, || format!("linear-Gaussian G: relative error {err:.3e}"))
}

/// `y_i ~ N(ln θ, σ²)` with a log-normal prior on θ: conjugate normal–normal in `ln θ`.
pub struct GaussianMean {
    pub ys: Vec<f64>,
    pub sigma: f64,
}

impl LogLikelihood for GaussianMean {
    fn dim(&self) -> usize {
        1
    }

    fn log_likelihood(&self, theta: &[f64]) -> sloppy_core::Result<f64> {
        let x = theta[0].ln();
        Ok(self.ys.iter().map(|y| -0.5 * ((y - x) / self.sigma).powi(2)).sum())
    }
}

pub fn check_smc_conjugate(seed: u64, particles: usize) -> Check {
    let (m0, s0) = (0.3, 1.0);
    let lik = GaussianMean {
        ys: vec![1.2, 0.4, 1.9, 0.8, 1.1],
        sigma: 1.0,
    };
    let prior = PriorSpec::new(vec!["theta".into()], vec![PriorComponent::log_normal("theta", f64::exp(m0), s0)]).unwrap();
    let n = lik.ys.len() as f64;
    let post_var = 1.0 / (1.0 / (s0 * s0) + n / (lik.sigma * lik.sigma));
    let post_mean = post_var * (m0 / (s0 * s0) + lik.ys.iter().sum::<f64>() / (lik.sigma * lik.sigma));

    let cfg = SmcConfig {
        particles,
        seed,
        ..SmcConfig::default()
    };
    let ens = smc_sample(&lik, &prior, &cfg).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = ens.particles().iter().map(|p| p[0].ln()).collect();
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se_mean = (post_var / m).sqrt();
    let se_var = post_var * (2.0 / (m - 1.0)).sqrt();
    ensure((mean - post_mean).abs() < 3.0 * se_mean, || {
        format!("SMC mean {mean:.5} vs exact {post_mean:.5} (3 s.e. = {:.5})", 3.0 * se_mean)
    })?;
    ensure((var - post_var).abs() < 3.0 * se_var, || {
        format!("SMC variance {var:.5} vs exact {post_var:.5} (3 s.e. = {:.5})", 3.0 * se_var)
    })
}

/// The three hand-worked extraction examples.
pub fn check_worked_eigenparameters() -> Check {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mm = names(&["k_cat", "[E_T]", "K_M"]);
    let eps = extract_eigenparameters(&[vec![0.7071, 0.7071, 0.0]], &[1.0], &mm, 0.2).map_err(|e| e.to_string())?;
    ensure(eps[0].display == "k_cat·[E_T]", || format!("example 1 gave {}", eps[0].display))?;
    ensure((eps[0].exponent("k_cat") - 1.0).abs() < 1e-12 && (eps[0].exponent("[E_T]") - 1.0).abs() < 1e-12, || {
        "example 1 exponents".into()
    })?;

    let abc = names(&["a", "b", "c"]);
    let eps = extract_eigenparameters(&[vec![0.66, -0.73, 0.12]], &[1.0], &abc, 0.2).map_err(|e| e.to_string())?;
    let e = &eps[0];
    ensure(
        !e.involves("c") && e.exponent("b") == 1.0 && (e.exponent("a") + 0.66 / 0.73).abs() < 1e-12,
        || format!("example 2 gave {:?}", e.terms),
    )?;

    let br = names(&["A_K1", "A_x1", "g_s"]);
    let norm = (0.81f64 + 0.16 + 1.0).sqrt();
    let v: Vec<f64> = [0.9, 0.4, -1.0].iter().map(|x| x / norm).collect();
    let eps = extract_eigenparameters(&[v], &[1.0], &br, 0.2).map_err(|e| e.to_string())?;
    let got = eps[0].exponent_vector(&["A_K1", "A_x1", "g_s"]);
    let inv: Vec<f64> = got.iter().map(|x| -x).collect();
    ensure(
        inv.iter().zip([0.9, 0.4, -1.0]).all(|(a, b)| (a - b).abs() < 1e-12),
        || format!("example 3 exponents {got:?}"),
    )?;
    ensure(eps[0].display == "g_s/(A_K1^{0.9}·A_x1^{0.4})", || format!("example 3 gave {}", eps[0].display))
}

/// Random unit vectors: the display string of every extracted eigenparameter
/// parses back to its exponents (to display precision).
pub fn check_display_grammar(seed: u64, trials: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = ["k_cat", "[E_T]", "K_M", "A_K1", "g_s", "D_III"].iter().map(|s| s.to_string()).collect();
    for _ in 0..trials {
        let v: Vec<f64> = (0..names.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = v.iter().map(|x| x / n).collect();
        let Ok(eps) = extract_eigenparameters(&[v], &[1.0], &names, 0.2) else {
            continue;
        };
        let e = &eps[0];
        let parsed = parse_display(&e.display).map_err(|err| format!("{}: {err}", e.display))?;
        ensure(parsed.len() == e.terms.len(), || format!("{} lost terms", e.display))?;
        for t in &e.terms {
            let p = parsed.iter().find(|p| p.name == t.name).ok_or(format!("{} missing {}", e.display, t.name))?;
            let shown = (t.exponent * 10.0).round() / 10.0;
            ensure(p.exponent == shown, || {
                format!("{}: {} parsed as {} (stored {})", e.display, t.name, p.exponent, t.exponent)
            })?;
        }
    }
    Ok(())
}

pub fn check_spectrum_examples() -> Check {
    let m = SensitivityMatrix::new(
        MatrixKind::P,
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0])),
        vec!["a".into(), "b".into()],
        String::new(),
    )
    .unwrap();
    let r = build_report(&m, 0.2).map_err(|e| e.to_string())?;
    ensure(r.rescaled_eigenvalues == vec![1.0, 0.25], || format!("diag(4,1) spectrum {:?}", r.rescaled_eigenvalues))?;
    ensure(r.stiffest().map(|e| e.display.as_str()) == Some("b"), || "diag(4,1) stiffest".into())
}

/// Every oracle check with the fixed seeds used by the acceptance run.
pub fn all_checks() -> Vec<(&'static str, Check)> {
    let mut out: Vec<(&'static str, Check)> = Vec::new();
    for seed in 0..20 {
        out.push(("H vs analytic quadratic (δ=1e-3)", check_hessian_matches_quadratic(seed, 1e-3)));
        out.push(("H vs analytic quadratic (δ=1e-2)", check_hessian_matches_quadratic(seed, 1e-2)));
        out.push(("P inverts constructed covariance", check_p_inverts_known_covariance(seed)));
        out.push(("L is PSD", check_l_is_psd(seed)));
    }
    out.push(("L = H at zero residual", check_l_equals_h_at_zero_residual()));
    out.push(("P rescaling invariance", check_p_scale_invariance(3)));
    out.push(("G = averaged H under identity prior", check_g_is_average_hessian_under_identity_prior(5)));
    out.push(("G single particle", check_g_single_particle()));
    out.push(("G linear-Gaussian", check_g_linear_gaussian()));
    out.push(("SMC conjugate posterior", check_smc_conjugate(11, 2000)));
    out.push(("worked eigenparameter examples", check_worked_eigenparameters()));
    out.push(("display grammar", check_display_grammar(17, 2000)));
    out.push(("spectrum examples", check_spectrum_examples()));
    out
}
