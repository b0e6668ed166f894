//! Likelihood-tempered Sequential Monte Carlo with adaptive temperatures and
//! random-walk Metropolis–Hastings moves in log-parameter space.

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::inference::likelihood::LogLikelihood;
use crate::inference::prior::PriorSpec;
use crate::rng::{substream, tags};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmcConfig {
    /// Number of particles M.
    pub particles: usize,
    /// Target probability C that each particle moves at least once per stage.
    pub move_acceptance: f64,
    /// Fraction of the particle count the ESS may fall to between stages.
    pub ess_threshold: f64,
    pub seed: u64,
    /// Cap on MH cycles per stage.
    pub max_cycles: usize,
    /// Proposal covariance is `proposal_scale²` times the particle log-covariance.
    pub proposal_scale: f64,
    pub max_stages: usize,
    pub parallelism: Parallelism,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            move_acceptance: 0.95,
            ess_threshold: 0.5,
            seed: 0,
            max_cycles: 50,
            proposal_scale: 0.5,
            max_stages: 1000,
            parallelism: Parallelism::default(),
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Validation("SMC needs at least 2 particles".into()));
        }
        if !(self.move_acceptance > 0.0 && self.move_acceptance < 1.0) {
            return Err(Error::Validation("move_acceptance must lie in (0,1)".into()));
        }
        if !(self.ess_threshold > 0.0 && self.ess_threshold < 1.0) {
            return Err(Error::Validation("ess_threshold must lie in (0,1)".into()));
        }
        if self.max_cycles == 0 || !(self.proposal_scale > 0.0) {
            return Err(Error::Validation("max_cycles and proposal_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmcDiagnostics {
    pub seed: u64,
    /// Temperature ladder starting at 0 and ending at 1.
    pub temperatures: Vec<f64>,
    /// Reweighted ESS at each new temperature, before resampling.
    pub ess: Vec<f64>,
    /// Acceptance rate of every MH cycle, per stage.
    pub acceptance_rates: Vec<Vec<f64>>,
    /// Prior draws whose likelihood could not be evaluated.
    pub failed_initial: usize,
    pub likelihood_evaluations: usize,
}

/// Equally weighted posterior sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    names: Vec<String>,
    noise_dims: usize,
    particles: Vec<Vec<f64>>,
    log_likelihoods: Vec<f64>,
    temperature: f64,
    diagnostics: SmcDiagnostics,
}

impl ParticleEnsemble {
    pub fn new(
        names: Vec<String>,
        noise_dims: usize,
        particles: Vec<Vec<f64>>,
        log_likelihoods: Vec<f64>,
    ) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Degenerate("ensemble has no particles".into()));
        }
        if log_likelihoods.len() != particles.len() {
            return Err(Error::Validation("one log-likelihood per particle required".into()));
        }
        if noise_dims > names.len() {
            return Err(Error::Validation("more noise coordinates than parameters".into()));
        }
        for (i, p) in particles.iter().enumerate() {
            if p.len() != names.len() {
                return Err(Error::Validation(format!("particle {i} has {} coordinates", p.len())));
            }
            if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::domain(format!("particle {i}"), "non-positive coordinate"));
            }
        }
        Ok(Self {
            names,
            noise_dims,
            particles,
            log_likelihoods,
            temperature: 1.0,
            diagnostics: SmcDiagnostics::default(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn noise_dims(&self) -> usize {
        self.noise_dims
    }

    /// Number of coordinates entering sensitivity matrices.
    pub fn sensitivity_dim(&self) -> usize {
        self.names.len() - self.noise_dims
    }

    pub fn particles(&self) -> &[Vec<f64>] {
        &self.particles
    }

    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn diagnostics(&self) -> &SmcDiagnostics {
        &self.diagnostics
    }

    pub fn set_diagnostics(&mut self, d: SmcDiagnostics) {
        self.diagnostics = d;
    }

    /// Natural-space arithmetic mean.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.names.len()];
        for p in &self.particles {
            for (a, v) in m.iter_mut().zip(p) {
                *a += v / n;
            }
        }
        m
    }

    /// Coefficient of variation of each coordinate (sample sd / mean).
    pub fn coefficient_of_variation(&self) -> Vec<f64> {
        let m = self.mean();
        let n = self.len() as f64;
        (0..self.names.len())
            .map(|j| {
                let var = self.particles.iter().map(|p| (p[j] - m[j]).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt() / m[j]
            })
            .collect()
    }
}

/// Effective sample size `(Σw)²/Σw²`.
pub fn ess(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Validation("weights must be finite and non-negative".into()));
    }
    let s: f64 = weights.iter().sum();
    if s <= 0.0 {
        return Err(Error::Degenerate("all weights are zero".into()));
    }
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    Ok(s * s / s2)
}

/// Normalised weights for an increment `delta` of the temperature.
fn incremental_weights(ll: &[f64], delta: f64) -> Vec<f64> {
    let max = ll
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| delta * v)
        .fold(f64::NEG_INFINITY, f64::max);
    ll.iter()
        .map(|&v| if v.is_finite() { (delta * v - max).exp() } else { 0.0 })
        .collect()
}

fn ess_at(ll: &[f64], delta: f64) -> f64 {
    ess(&incremental_weights(ll, delta)).unwrap_or(0.0)
}

/// Next temperature increment so the reweighted ESS hits `target`, or the full
/// remaining step when that already satisfies it.
fn next_increment(ll: &[f64], remaining: f64, target: f64) -> f64 {
    if ess_at(ll, remaining) >= target {
        return remaining;
    }
    let (mut lo, mut hi) = (0.0, remaining);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ess_at(ll, mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        lo
    } else {
        hi
    }
}

/// Systematic resampling; returns ancestor indices.
pub fn systematic_resample(weights: &[f64], u: f64) -> Vec<usize> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0] / total;
    let mut i = 0;
    for k in 0..n {
        let point = (k as f64 + u) / n as f64;
        while point > cum && i + 1 < n {
            i += 1;
            cum += weights[i] / total;
        }
        out.push(i);
    }
    out
}

/// Log-space mean and unbiased covariance of the rows of `x`.
pub(crate) fn log_covariance(x: &[Vec<f64>], dims: usize) -> DMatrix<f64> {
    let n = x.len();
    let mut mean = DVector::<f64>::zeros(dims);
    for p in x {
        for j in 0..dims {
            mean[j] += p[j];
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::<f64>::zeros(dims, dims);
    for p in x {
        let r = DVector::from_fn(dims, |j, _| p[j] - mean[j]);
        cov.ger(1.0, &r, &r, 1.0);
    }
    cov / (n as f64 - 1.0).max(1.0)
}

/// Cholesky factor of `cov`, adding diagonal jitter when it is not positive definite.
fn robust_cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    let scale = (0..d).map(|i| cov[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..30 {
        let m = cov + DMatrix::identity(d, d) * jitter;
        if let Some(c) = m.cholesky() {
            return Ok(c.l());
        }
        jitter = if jitter == 0.0 { 1e-12 * scale } else { jitter * 10.0 };
    }
    Err(Error::Matrix("particle covariance could not be factorised".into()))
}

struct State {
    x: Vec<f64>,
    log_prior: f64,
    ll: f64,
}

/// Prior density of `exp(x)` with respect to `x`.
fn log_prior_x(prior: &PriorSpec, x: &[f64]) -> f64 {
    let theta: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let lp = prior.log_prior(&theta);
    if lp.is_finite() {
        lp + x.iter().sum::<f64>()
    } else {
        f64::NEG_INFINITY
    }
}

fn eval_ll(lik: &dyn LogLikelihood, x: &[f64]) -> f64 {
    let theta: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    match lik.log_likelihood(&theta) {
        Ok(v) if !v.is_nan() => v,
        _ => f64::NEG_INFINITY,
    }
}

/// Draws an equally weighted sample from `prior × likelihood`.
pub fn smc_sample(lik: &dyn LogLikelihood, prior: &PriorSpec, cfg: &SmcConfig) -> Result<ParticleEnsemble> {
    cfg.validate()?;
    let d = lik.dim();
    if prior.dim() != d {
        return Err(Error::Validation(format!(
            "prior covers {} parameters, likelihood needs {d}",
            prior.dim()
        )));
    }
    let m = cfg.particles;
    let par = cfg.parallelism;
    let mut diag = SmcDiagnostics {
        seed: cfg.seed,
        temperatures: vec![0.0],
        ..Default::default()
    };

    let mut states: Vec<State> = map_indexed(m, par, |i| {
        let theta = prior.sample_one(cfg.seed, i);
        let x: Vec<f64> = theta.iter().map(|v| v.ln()).collect();
        State {
            log_prior: log_prior_x(prior, &x),
            ll: eval_ll(lik, &x),
            x,
        }
    });
    diag.likelihood_evaluations += m;
    diag.failed_initial = states.iter().filter(|s| !s.ll.is_finite()).count();
    if diag.failed_initial == m {
        return Err(Error::Degenerate(
            "every prior draw has zero likelihood; check the data and the model".into(),
        ));
    }
    if diag.failed_initial > 0 {
        warn!("{} of {m} prior draws have zero likelihood", diag.failed_initial);
    }

    let mut gamma = 0.0f64;
    let mut stage = 0u64;
    while gamma < 1.0 {
        if stage as usize >= cfg.max_stages {
            return Err(Error::Degenerate(format!(
                "temperature reached only {gamma} after {} stages",
                cfg.max_stages
            )));
        }
        let ll: Vec<f64> = states.iter().map(|s| s.ll).collect();
        let finite = ll.iter().filter(|v| v.is_finite()).count() as f64;
        let delta = next_increment(&ll, 1.0 - gamma, cfg.ess_threshold * finite);
        let new_gamma = if gamma + delta >= 1.0 { 1.0 } else { gamma + delta };
        let w = incremental_weights(&ll, new_gamma - gamma);
        let stage_ess = ess(&w)?;
        diag.temperatures.push(new_gamma);
        diag.ess.push(stage_ess);

        let u: f64 = substream(cfg.seed, &[tags::RESAMPLE, stage]).random();
        let ancestors = systematic_resample(&w, u);
        states = ancestors
            .iter()
            .map(|&a| State {
                x: states[a].x.clone(),
                log_prior: states[a].log_prior,
                ll: states[a].ll,
            })
            .collect();
        gamma = new_gamma;

        let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
        let chol = robust_cholesky(&(log_covariance(&xs, d) * cfg.proposal_scale.powi(2)))?;

        let mut rates = Vec::new();
        let mut cycles = 1usize;
        let mut c = 0usize;
        while c < cycles {
            let moved: Vec<(State, bool)> = map_indexed(m, par, |i| {
                let s = &states[i];
                let mut rng = substream(cfg.seed, &[tags::MOVE, stage, c as u64, i as u64]);
                let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                let step = &chol * z;
                let x_new: Vec<f64> = s.x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let log_u: f64 = rng.random::<f64>().ln();
                let lp_new = log_prior_x(prior, &x_new);
                if !lp_new.is_finite() {
                    return (State { x: s.x.clone(), log_prior: s.log_prior, ll: s.ll }, false);
                }
                let ll_new = eval_ll(lik, &x_new);
                let cur = s.log_prior + gamma * s.ll;
                let prop = lp_new + gamma * ll_new;
                if prop.is_finite() && log_u < prop - cur {
                    (State { x: x_new, log_prior: lp_new, ll: ll_new }, true)
                } else {
                    (State { x: s.x.clone(), log_prior: s.log_prior, ll: s.ll }, false)
                }
            });
            diag.likelihood_evaluations += m;
            let accepted = moved.iter().filter(|(_, a)| *a).count();
            states = moved.into_iter().map(|(s, _)| s).collect();
            let rate = accepted as f64 / m as f64;
            rates.push(rate);
            if c == 0 {
                if accepted == 0 {
                    return Err(Error::MoveFailure { temperature: gamma });
                }
                cycles = if rate >= 1.0 {
                    1
                } else {
                    let r = ((1.0 - cfg.move_acceptance).ln() / (1.0 - rate).ln()).ceil();
                    (r as usize).clamp(1, cfg.max_cycles)
                };
            }
            c += 1;
        }
        debug!(
            "stage {stage}: gamma {gamma:.6e} ess {stage_ess:.1} cycles {cycles} pilot acceptance {:.3}",
            rates[0]
        );
        diag.acceptance_rates.push(rates);
        stage += 1;
    }
    info!(
        "SMC finished in {stage} stages with {} likelihood evaluations",
        diag.likelihood_evaluations
    );

    let names = lik.names();
    let particles: Vec<Vec<f64>> = states.iter().map(|s| s.x.iter().map(|v| v.exp()).collect()).collect();
    let lls = states.iter().map(|s| s.ll).collect();
    let mut ens = ParticleEnsemble::new(names, lik.noise_dims(), particles, lls)?;
    ens.temperature = gamma;
    ens.diagnostics = diag;
    Ok(ens)
}
