//! Uniform and multivariate log-normal priors over positive parameters.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::{substream, tags};

/// One independent block of the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorComponent {
    /// `θ ~ Uniform(lo, hi)` in natural space.
    Uniform { parameter: String, lo: f64, hi: f64 },
    /// `ln θ ~ N(mu, cov)` jointly over `parameters`.
    LogNormal {
        parameters: Vec<String>,
        mu: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
}

impl PriorComponent {
    /// Independent log-normal with the given median and log-space standard deviation.
    pub fn log_normal(parameter: &str, median: f64, log_sd: f64) -> Self {
        PriorComponent::LogNormal {
            parameters: vec![parameter.to_string()],
            mu: vec![median.ln()],
            cov: vec![vec![log_sd * log_sd]],
        }
    }

    pub fn uniform(parameter: &str, lo: f64, hi: f64) -> Self {
        PriorComponent::Uniform {
            parameter: parameter.to_string(),
            lo,
            hi,
        }
    }
}

#[derive(Debug, Clone)]
enum Block {
    Uniform {
        index: usize,
        lo: f64,
        hi: f64,
    },
    LogNormal {
        indices: Vec<usize>,
        mu: DVector<f64>,
        chol: DMatrix<f64>,
        log_norm: f64,
    },
}

/// Prior over the full inference vector, including the noise parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PriorSpecDef", into = "PriorSpecDef")]
pub struct PriorSpec {
    names: Vec<String>,
    components: Vec<PriorComponent>,
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct PriorSpecDef {
    parameters: Vec<String>,
    components: Vec<PriorComponent>,
}

impl TryFrom<PriorSpecDef> for PriorSpec {
    type Error = Error;
    fn try_from(d: PriorSpecDef) -> Result<Self> {
        PriorSpec::new(d.parameters, d.components)
    }
}

impl From<PriorSpec> for PriorSpecDef {
    fn from(p: PriorSpec) -> Self {
        PriorSpecDef {
            parameters: p.names,
            components: p.components,
        }
    }
}

impl PartialEq for PriorSpec {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.components == other.components
    }
}

impl PriorSpec {
    /// `names` fixes the coordinate order; every name must be covered exactly once.
    pub fn new(names: Vec<String>, components: Vec<PriorComponent>) -> Result<Self> {
        let mut covered = vec![false; names.len()];
        let mut claim = |name: &str| -> Result<usize> {
            let i = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Validation(format!("prior names unknown parameter `{name}`")))?;
            if covered[i] {
                return Err(Error::Validation(format!("parameter `{name}` has two priors")));
            }
            covered[i] = true;
            Ok(i)
        };
        let mut blocks = Vec::with_capacity(components.len());
        for c in &components {
            match c {
                PriorComponent::Uniform { parameter, lo, hi } => {
                    if !(*lo > 0.0 && hi > lo && hi.is_finite()) {
                        return Err(Error::Validation(format!(
                            "uniform prior on `{parameter}` needs 0 < lo < hi, got ({lo}, {hi})"
                        )));
                    }
                    blocks.push(Block::Uniform {
                        index: claim(parameter)?,
                        lo: *lo,
                        hi: *hi,
                    });
                }
                PriorComponent::LogNormal { parameters, mu, cov } => {
                    let k = parameters.len();
                    if k == 0 || mu.len() != k || cov.len() != k || cov.iter().any(|r| r.len() != k) {
                        return Err(Error::Validation(format!(
                            "log-normal prior over {parameters:?} has inconsistent dimensions"
                        )));
                    }
                    let m = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
                    let asym = (&m - m.transpose()).abs().max();
                    if asym > 1e-12 * m.abs().max().max(1e-300) {
                        return Err(Error::Validation(format!(
                            "log-normal covariance over {parameters:?} is not symmetric"
                        )));
                    }
                    let chol = m.clone().cholesky().ok_or_else(|| {
                        Error::Matrix(format!("log-normal covariance over {parameters:?} is not positive definite"))
                    })?;
                    let l = chol.l();
                    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                    let indices = parameters.iter().map(|p| claim(p)).collect::<Result<Vec<_>>>()?;
                    blocks.push(Block::LogNormal {
                        indices,
                        mu: DVector::from_vec(mu.clone()),
                        chol: l,
                        log_norm: -0.5 * (k as f64) * (2.0 * PI).ln() - 0.5 * log_det,
                    });
                }
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::Validation(format!("parameter `{}` has no prior", names[i])));
        }
        Ok(Self {
            names,
            components,
            blocks,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn components(&self) -> &[PriorComponent] {
        &self.components
    }

    /// Log density over θ in natural space; `-inf` outside the support.
    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        if theta.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for b in &self.blocks {
            match b {
                Block::Uniform { index, lo, hi } => {
                    let v = theta[*index];
                    if v < *lo || v > *hi {
                        return f64::NEG_INFINITY;
                    }
                    total -= (hi - lo).ln();
                }
                Block::LogNormal {
                    indices,
                    mu,
                    chol,
                    log_norm,
                } => {
                    let x = DVector::from_iterator(indices.len(), indices.iter().map(|&i| theta[i].ln()));
                    let r = &x - mu;
                    let z = chol.solve_lower_triangular(&r).expect("non-singular factor");
                    total += log_norm - 0.5 * z.norm_squared() - x.sum();
                }
            }
        }
        total
    }

    /// Draw number `index` of the stream identified by `seed`.
    pub fn sample_one(&self, seed: u64, index: usize) -> Vec<f64> {
        let mut rng = substream(seed, &[tags::PRIOR, index as u64]);
        let mut theta = vec![0.0; self.dim()];
        for b in &self.blocks {
            match b {
                Block::Uniform { index, lo, hi } => {
                    theta[*index] = rng.random_range(*lo..*hi);
                }
                Block::LogNormal { indices, mu, chol, .. } => {
                    let z = DVector::from_fn(indices.len(), |_, _| StandardNormal.sample(&mut rng));
                    let x = mu + chol * z;
                    for (k, &i) in indices.iter().enumerate() {
                        theta[i] = x[k].exp();
                    }
                }
            }
        }
        theta
    }

    /// `n` independent draws, natural space.
    pub fn prior_sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n).map(|i| self.sample_one(seed, i)).collect()
    }

    /// Log-space mean and covariance; uniform components use the exact moments of `ln U`.
    pub fn log_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim();
        let mut mean = DVector::zeros(d);
        let mut cov = DMatrix::zeros(d, d);
        for b in &self.blocks {
            match b {
                Block::Uniform { index, lo, hi } => {
                    let (m, v) = log_uniform_moments(*lo, *hi);
                    mean[*index] = m;
                    cov[(*index, *index)] = v;
                }
                Block::LogNormal { indices, mu, chol, .. } => {
                    let c = chol * chol.transpose();
                    for (a, &i) in indices.iter().enumerate() {
                        mean[i] = mu[a];
                        for (b2, &j) in indices.iter().enumerate() {
                            cov[(i, j)] = c[(a, b2)];
                        }
                    }
                }
            }
        }
        (mean, cov)
    }

    /// Lower-triangular `L_p` with `L_p L_pᵀ = Ω`, the log-space prior covariance.
    pub fn prior_cholesky(&self) -> Result<DMatrix<f64>> {
        let (_, cov) = self.log_moments();
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Matrix("prior log-covariance is not positive definite".into()))
    }

    /// True when any coordinate uses the `ln U` surrogate variance in [`Self::prior_cholesky`].
    pub fn has_uniform_surrogate(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, Block::Uniform { .. }))
    }

    /// Natural-space median per coordinate.
    pub fn median(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for b in &self.blocks {
            match b {
                Block::Uniform { index, lo, hi } => m[*index] = 0.5 * (lo + hi),
                Block::LogNormal { indices, mu, .. } => {
                    for (k, &i) in indices.iter().enumerate() {
                        m[i] = mu[k].exp();
                    }
                }
            }
        }
        m
    }

    /// Log-space box: uniform support, or `mu ± 6 sd` for log-normal coordinates.
    pub fn log_bounds(&self) -> Vec<(f64, f64)> {
        let (mean, cov) = self.log_moments();
        let mut out = vec![(0.0, 0.0); self.dim()];
        for b in &self.blocks {
            match b {
                Block::Uniform { index, lo, hi } => out[*index] = (lo.ln(), hi.ln()),
                Block::LogNormal { indices, .. } => {
                    for &i in indices {
                        let s = cov[(i, i)].sqrt();
                        out[i] = (mean[i] - 6.0 * s, mean[i] + 6.0 * s);
                    }
                }
            }
        }
        out
    }
}

/// Mean and variance of `ln U` for `U ~ Uniform(a, b)`.
pub fn log_uniform_moments(a: f64, b: f64) -> (f64, f64) {
    let w = b - a;
    let (la, lb) = (a.ln(), b.ln());
    let m1 = (b * lb - a * la) / w - 1.0;
    let m2 = (b * (lb * lb - 2.0 * lb + 2.0) - a * (la * la - 2.0 * la + 2.0)) / w;
    (m1, (m2 - m1 * m1).max(0.0))
}
