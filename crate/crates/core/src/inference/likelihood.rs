//! Gaussian log-likelihood of a model against a dataset.

use std::f64::consts::PI;

use crate::data::{Dataset, NoiseSpec};
use crate::error::{Error, Result};
use crate::model::Model;

/// Log-likelihood over a full parameter vector whose trailing `noise_dims`
/// coordinates are noise parameters excluded from sensitivity analysis.
pub trait LogLikelihood: Sync {
    fn dim(&self) -> usize;

    fn names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta{i}")).collect()
    }

    fn noise_dims(&self) -> usize {
        0
    }

    fn log_likelihood(&self, theta: &[f64]) -> Result<f64>;

    /// Raw residuals `y_obs - y_model(θ)`, when the likelihood is Gaussian.
    fn raw_residuals(&self, _theta: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Validation("likelihood does not expose residuals".into()))
    }

    /// Per-record standard deviations at `theta`.
    fn noise_scales(&self, _theta: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Validation("likelihood does not expose noise scales".into()))
    }
}

/// Standard deviation of each record given model outputs and the noise parameter.
fn scales(noise: NoiseSpec, noise_value: f64, y_model: &[f64]) -> Result<Vec<f64>> {
    if !(noise_value > 0.0) || !noise_value.is_finite() {
        return Err(Error::Likelihood(format!("noise parameter {noise_value} is not positive")));
    }
    match noise {
        NoiseSpec::Heteroscedastic { .. } => y_model
            .iter()
            .enumerate()
            .map(|(k, &y)| {
                if y > 0.0 {
                    Ok(noise_value * y)
                } else {
                    Err(Error::Likelihood(format!(
                        "model output {y} at record {k} is not positive under heteroscedastic noise"
                    )))
                }
            })
            .collect(),
        NoiseSpec::Homoscedastic { .. } => Ok(vec![noise_value; y_model.len()]),
    }
}

/// `θ = (model parameters…, noise)`; `noise` is ε or σ depending on the dataset.
pub fn log_likelihood(theta: &[f64], dataset: &Dataset, model: &dyn Model) -> Result<f64> {
    let d = model.spec().dim();
    if theta.len() != d + 1 {
        return Err(Error::Validation(format!(
            "expected {} parameters (model + noise), got {}",
            d + 1,
            theta.len()
        )));
    }
    let y_model = model.predict(&theta[..d], dataset.grid())?;
    let sig = scales(dataset.noise(), theta[d], &y_model)?;
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let mut total = 0.0;
    for ((y, m), s) in dataset.observations().iter().zip(&y_model).zip(&sig) {
        let r = (y - m) / s;
        total += -half_ln_2pi - s.ln() - 0.5 * r * r;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Likelihood(format!("log-likelihood is {total}")))
    }
}

/// Negative log-likelihood.
pub fn cost_function(theta: &[f64], dataset: &Dataset, model: &dyn Model) -> Result<f64> {
    log_likelihood(theta, dataset, model).map(|l| -l)
}

/// A model bound to a dataset.
#[derive(Clone, Copy)]
pub struct ModelLikelihood<'a> {
    pub model: &'a dyn Model,
    pub dataset: &'a Dataset,
}

impl<'a> ModelLikelihood<'a> {
    pub fn new(model: &'a dyn Model, dataset: &'a Dataset) -> Self {
        Self { model, dataset }
    }
}

impl LogLikelihood for ModelLikelihood<'_> {
    fn dim(&self) -> usize {
        self.model.spec().dim() + 1
    }

    fn names(&self) -> Vec<String> {
        let mut n = self.model.spec().estimated_names();
        n.push(self.dataset.noise().parameter_name().to_string());
        n
    }

    fn noise_dims(&self) -> usize {
        1
    }

    fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        log_likelihood(theta, self.dataset, self.model)
    }

    fn raw_residuals(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let d = self.model.spec().dim();
        let y_model = self.model.predict(&theta[..d], self.dataset.grid())?;
        Ok(self
            .dataset
            .observations()
            .iter()
            .zip(&y_model)
            .map(|(y, m)| y - m)
            .collect())
    }

    fn noise_scales(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let d = self.model.spec().dim();
        let y_model = self.model.predict(&theta[..d], self.dataset.grid())?;
        scales(self.dataset.noise(), theta[d], &y_model)
    }
}
