use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::NoiseSpec;
use crate::error::{Error, Result};
use crate::inference::{MleOptions, PriorSpec, SmcConfig};
use crate::model::Model;
use crate::models::{BeelerReuter, Ecosystem, MichaelisMenten};
use crate::sloppiness::MatrixKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    MichaelisMenten,
    Ecosystem,
    BeelerReuter,
}

impl ModelName {
    pub fn build(&self) -> Box<dyn Model> {
        match self {
            ModelName::MichaelisMenten => Box::new(MichaelisMenten::new()),
            ModelName::Ecosystem => Box::new(Ecosystem::new()),
            ModelName::BeelerReuter => Box::new(BeelerReuter::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// Synthetic data on the product grid `inputs × channels`.
    Synth {
        seed: u64,
        noise: NoiseSpec,
        inputs: Vec<f64>,
        channels: Vec<usize>,
        /// Generating parameters; the model's reference values when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parameters: Option<Vec<f64>>,
    },
    Csv {
        path: PathBuf,
        /// Overrides the CSV sidecar.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<NoiseSpec>,
    },
}

fn default_delta() -> f64 {
    1e-3
}

fn default_threshold() -> f64 {
    crate::sloppiness::DEFAULT_THRESHOLD
}

fn default_subsample() -> usize {
    500
}

fn default_matrices() -> Vec<MatrixKind> {
    vec![MatrixKind::H, MatrixKind::L, MatrixKind::P, MatrixKind::G]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelName,
    pub data: DataSource,
    pub prior: PriorSpec,
    /// `null` disables sampling.
    pub smc: Option<SmcConfig>,
    /// `null` disables the maximum-likelihood fit.
    #[serde(default = "default_mle")]
    pub mle: Option<MleOptions>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_matrices")]
    pub matrices: Vec<MatrixKind>,
    /// Number of per-particle Hessians averaged into G.
    #[serde(default = "default_subsample")]
    pub g_subsample: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub output: PathBuf,
}

fn default_mle() -> Option<MleOptions> {
    Some(MleOptions::default())
}

/// Error located at a JSON path inside the config.
fn at(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("config {path}: {msg}"))
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| at(&format!("`{}`", e.path()), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn needs_ensemble(&self) -> bool {
        self.matrices.iter().any(|m| matches!(m, MatrixKind::P | MatrixKind::G))
    }

    pub fn needs_fit(&self) -> bool {
        self.matrices.iter().any(|m| matches!(m, MatrixKind::H | MatrixKind::L))
    }

    /// Sets every seed (data, sampler, subsample) to `seed`.
    pub fn set_seed(&mut self, seed: u64) {
        if let DataSource::Synth { seed: s, .. } = &mut self.data {
            *s = seed;
        }
        if let Some(smc) = &mut self.smc {
            smc.seed = seed;
        }
    }

    pub fn seed(&self) -> u64 {
        match (&self.data, &self.smc) {
            (_, Some(s)) => s.seed,
            (DataSource::Synth { seed, .. }, None) => *seed,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model.build();
        let mut names = model.spec().estimated_names();
        match &self.data {
            DataSource::Synth {
                noise,
                inputs,
                channels,
                parameters,
                ..
            } => {
                noise.validate().map_err(|e| at("data.noise", e))?;
                names.push(noise.parameter_name().into());
                if inputs.is_empty() || channels.is_empty() {
                    return Err(at("data", "inputs and channels must be non-empty"));
                }
                if let Some(&c) = channels.iter().find(|&&c| c >= model.channels().len()) {
                    return Err(at("data.channels", format!("channel {c} out of range for {}", model.name())));
                }
                if let Some(p) = parameters {
                    if p.len() != model.spec().dim() {
                        return Err(at(
                            "data.parameters",
                            format!("expected {} values, got {}", model.spec().dim(), p.len()),
                        ));
                    }
                }
            }
            DataSource::Csv { path, noise } => {
                if !path.exists() {
                    return Err(at("data.path", format!("{} does not exist", path.display())));
                }
                if let Some(n) = noise {
                    n.validate().map_err(|e| at("data.noise", e))?;
                }
                // Noise name is checked once the dataset is read.
                names.push(self.prior.names().last().cloned().unwrap_or_default());
            }
        }
        if self.prior.names() != names.as_slice() {
            return Err(at(
                "prior.parameters",
                format!("expected {:?}, got {:?}", names, self.prior.names()),
            ));
        }
        if let Some(smc) = &self.smc {
            smc.validate().map_err(|e| at("smc", e))?;
        }
        if !(1e-4..=1e-2).contains(&self.delta) {
            return Err(at("delta", format!("{} outside [1e-4, 1e-2]", self.delta)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(at("threshold", "must lie in (0,1)"));
        }
        if self.g_subsample == 0 {
            return Err(at("g_subsample", "must be positive"));
        }
        if self.matrices.is_empty() {
            return Err(at("matrices", "at least one matrix is required"));
        }
        if self.needs_ensemble() && self.smc.is_none() {
            return Err(at("matrices", "P and G need an ensemble; enable `smc`"));
        }
        if self.needs_fit() && self.mle.is_none() {
            return Err(at("matrices", "H and L need a best fit; enable `mle`"));
        }
        Ok(())
    }
}
