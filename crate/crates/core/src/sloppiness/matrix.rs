//! The four sensitivity matrices over log-parameters.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Parallelism};
use crate::inference::likelihood::LogLikelihood;
use crate::inference::prior::PriorSpec;
use crate::inference::smc::{log_covariance, ParticleEnsemble};
use crate::rng::{substream, tags};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatrixKind {
    H,
    L,
    P,
    G,
}

impl MatrixKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixKind::H => "H",
            MatrixKind::L => "L",
            MatrixKind::P => "P",
            MatrixKind::G => "G",
        }
    }
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(MatrixKind::H),
            "L" | "l" => Ok(MatrixKind::L),
            "P" | "p" => Ok(MatrixKind::P),
            "G" | "g" => Ok(MatrixKind::G),
            other => Err(Error::Validation(format!("unknown matrix kind `{other}`"))),
        }
    }
}

/// Symmetric d×d matrix over the non-noise log-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub kind: MatrixKind,
    pub values: DMatrix<f64>,
    pub names: Vec<String>,
    pub context: String,
}

impl SensitivityMatrix {
    pub fn new(kind: MatrixKind, values: DMatrix<f64>, names: Vec<String>, context: String) -> Result<Self> {
        if !values.is_square() || values.nrows() != names.len() {
            return Err(Error::Matrix(format!(
                "{kind} is {}x{} for {} parameters",
                values.nrows(),
                values.ncols(),
                names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Matrix(format!("{kind} has non-finite entries")));
        }
        Ok(Self {
            kind,
            values: symmetrize(&values),
            names,
            context,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn check_delta(delta: f64) -> Result<()> {
    if !(1e-4..=1e-2).contains(&delta) {
        return Err(Error::Validation(format!("finite-difference step {delta} outside [1e-4, 1e-2]")));
    }
    Ok(())
}

/// Log-space point with the first coordinates replaced; remaining (noise) coordinates kept.
fn shifted(theta: &[f64], d: usize, shifts: &[(usize, f64)]) -> Vec<f64> {
    let mut t = theta.to_vec();
    for &(i, s) in shifts {
        debug_assert!(i < d);
        t[i] = (theta[i].ln() + s).exp();
    }
    t
}

fn stencil_eval(lik: &dyn LogLikelihood, theta: &[f64]) -> Result<f64> {
    match lik.log_likelihood(theta) {
        Ok(v) if v.is_finite() => Ok(-v),
        Ok(v) => Err(Error::Stencil {
            point: theta.to_vec(),
            reason: format!("log-likelihood is {v}"),
        }),
        Err(e) => Err(Error::Stencil {
            point: theta.to_vec(),
            reason: e.to_string(),
        }),
    }
}

/// Central-difference Hessian of `-ln L` with respect to the log of the first
/// `dim - noise_dims` coordinates, noise held at its value in `theta`.
pub fn log_hessian(lik: &dyn LogLikelihood, theta: &[f64], delta: f64) -> Result<DMatrix<f64>> {
    let d = lik.dim() - lik.noise_dims();
    let h = delta;
    let f0 = stencil_eval(lik, theta)?;
    let mut m = DMatrix::zeros(d, d);
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for i in 0..d {
        plus[i] = stencil_eval(lik, &shifted(theta, d, &[(i, h)]))?;
        minus[i] = stencil_eval(lik, &shifted(theta, d, &[(i, -h)]))?;
        m[(i, i)] = (plus[i] - 2.0 * f0 + minus[i]) / (h * h);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let fpp = stencil_eval(lik, &shifted(theta, d, &[(i, h), (j, h)]))?;
            let fpm = stencil_eval(lik, &shifted(theta, d, &[(i, h), (j, -h)]))?;
            let fmp = stencil_eval(lik, &shifted(theta, d, &[(i, -h), (j, h)]))?;
            let fmm = stencil_eval(lik, &shifted(theta, d, &[(i, -h), (j, -h)]))?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn names_of(lik: &dyn LogLikelihood) -> Vec<String> {
    let d = lik.dim() - lik.noise_dims();
    lik.names().into_iter().take(d).collect()
}

fn point_context(names: &[String], theta: &[f64]) -> String {
    let parts: Vec<String> = names.iter().zip(theta).map(|(n, v)| format!("{n}={v:e}")).collect();
    format!("theta*: {}", parts.join(", "))
}

/// Log-space Hessian `H` of the cost at `theta`.
pub fn hessian_h(lik: &dyn LogLikelihood, theta: &[f64], delta: f64) -> Result<SensitivityMatrix> {
    check_delta(delta)?;
    let names = names_of(lik);
    let ctx = point_context(&lik.names(), theta);
    SensitivityMatrix::new(MatrixKind::H, log_hessian(lik, theta, delta)?, names, ctx)
}

/// Levenberg–Marquardt approximation `L = JᵀJ` of standardised residuals, with
/// the noise standard deviations frozen at their values at `theta`.
pub fn lm_hessian_l(lik: &dyn LogLikelihood, theta: &[f64], delta: f64) -> Result<SensitivityMatrix> {
    check_delta(delta)?;
    let d = lik.dim() - lik.noise_dims();
    let scales = lik.noise_scales(theta).map_err(|e| Error::Stencil {
        point: theta.to_vec(),
        reason: e.to_string(),
    })?;
    let resid = |t: &[f64]| -> Result<Vec<f64>> {
        let r = lik.raw_residuals(t).map_err(|e| Error::Stencil {
            point: t.to_vec(),
            reason: e.to_string(),
        })?;
        Ok(r.iter().zip(&scales).map(|(a, s)| a / s).collect())
    };
    let n = scales.len();
    let mut jac = DMatrix::zeros(n, d);
    for i in 0..d {
        let rp = resid(&shifted(theta, d, &[(i, delta)]))?;
        let rm = resid(&shifted(theta, d, &[(i, -delta)]))?;
        for k in 0..n {
            jac[(k, i)] = (rp[k] - rm[k]) / (2.0 * delta);
        }
    }
    let names = names_of(lik);
    let ctx = point_context(&lik.names(), theta);
    SensitivityMatrix::new(MatrixKind::L, jac.transpose() * &jac, names, ctx)
}

fn log_particles(ens: &ParticleEnsemble) -> Vec<Vec<f64>> {
    ens.particles().iter().map(|p| p.iter().map(|v| v.ln()).collect()).collect()
}

/// Unbiased covariance of the log particles over the non-noise coordinates.
pub fn sample_log_covariance(ens: &ParticleEnsemble) -> Result<DMatrix<f64>> {
    if ens.len() < 2 {
        return Err(Error::Degenerate("covariance needs at least two particles".into()));
    }
    Ok(log_covariance(&log_particles(ens), ens.sensitivity_dim()))
}

/// Largest condition number accepted before `P` is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Inverse of a covariance matrix via its symmetric eigendecomposition.
pub fn invert_covariance(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetrize(cov).symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(max > 0.0) || !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    Ok(symmetrize(&(&eig.eigenvectors * inv * eig.eigenvectors.transpose())))
}

/// Inverse posterior log-covariance `P`.
pub fn pca_matrix_p(ens: &ParticleEnsemble) -> Result<SensitivityMatrix> {
    let cov = sample_log_covariance(ens)?;
    let names = ens.names()[..ens.sensitivity_dim()].to_vec();
    SensitivityMatrix::new(
        MatrixKind::P,
        invert_covariance(&cov)?,
        names,
        format!("ensemble of {} particles", ens.len()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LisOptions {
    pub delta: f64,
    /// Number of particles whose Hessians are averaged (capped at the ensemble size).
    pub subsample: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for LisOptions {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            subsample: 500,
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

/// Prior-preconditioned Hessian `L_pᵀ H L_p` averaged over an equally weighted
/// uniform subsample of the ensemble.
pub fn lis_matrix_g(
    ens: &ParticleEnsemble,
    prior: &PriorSpec,
    lik: &dyn LogLikelihood,
    opts: &LisOptions,
) -> Result<SensitivityMatrix> {
    check_delta(opts.delta)?;
    let d = lik.dim() - lik.noise_dims();
    if ens.sensitivity_dim() != d || prior.dim() != lik.dim() {
        return Err(Error::Validation("ensemble, prior and likelihood dimensions differ".into()));
    }
    let lp_full = prior.prior_cholesky()?;
    let lp = lp_full.view((0, 0), (d, d)).into_owned();
    let m = opts.subsample.min(ens.len()).max(1);
    let mut idx: Vec<usize> = if m == ens.len() {
        (0..m).collect()
    } else {
        let mut rng = substream(opts.seed, &[tags::SUBSAMPLE]);
        sample(&mut rng, ens.len(), m).into_vec()
    };
    idx.sort_unstable();
    let hessians: Vec<Result<DMatrix<f64>>> = map_indexed(m, opts.parallelism, |k| {
        let h = log_hessian(lik, &ens.particles()[idx[k]], opts.delta)?;
        Ok(lp.transpose() * h * &lp)
    });
    let ok: Vec<DMatrix<f64>> = hessians
        .into_iter()
        .filter_map(|r| match r {
            Ok(h) if h.iter().all(|v| v.is_finite()) => Some(h),
            Ok(_) => None,
            Err(e) => {
                log::debug!("dropping sample from G: {e}");
                None
            }
        })
        .collect();
    let dropped = m - ok.len();
    if dropped as f64 > 0.1 * m as f64 || ok.is_empty() {
        return Err(Error::Degenerate(format!(
            "{dropped} of {m} per-sample Hessians failed while estimating G"
        )));
    }
    if dropped > 0 {
        log::warn!("{dropped} of {m} per-sample Hessians dropped from G");
    }
    let n = ok.len() as f64;
    let g = DMatrix::from_fn(d, d, |i, j| {
        let col: Vec<f64> = ok.iter().map(|h| h[(i, j)]).collect();
        pairwise_sum(&col) / n
    });
    let names = names_of(lik);
    let mut ctx = format!("ensemble of {} particles, {} Hessians averaged", ens.len(), ok.len());
    if prior.has_uniform_surrogate() {
        ctx.push_str("; uniform prior components use the variance of ln U as surrogate");
    }
    SensitivityMatrix::new(MatrixKind::G, g, names, ctx)
}
