//! Built-in scenario configurations.

use std::path::Path;

use crate::data::NoiseSpec;
use crate::error::{Error, Result};
use crate::inference::{MleOptions, PriorComponent, PriorSpec, SmcConfig};
use crate::models::ecosystem::{PARAMETER_NAMES as ECO_NAMES, REFERENCE as ECO_REFERENCE};
use crate::models::BeelerReuter;
use crate::model::Model;
use crate::sloppiness::MatrixKind;

use super::config::{DataSource, ModelName, PipelineConfig};

pub const PRESETS: [&str; 6] = [
    "mm-scenario-1",
    "mm-scenario-2",
    "mm-scenario-3",
    "ecosystem-vague",
    "ecosystem-informative",
    "br-default",
];

/// Substrate concentrations far above K_M.
pub const MM_DATASET_A: [f64; 5] = [1500.0, 2000.0, 2500.0, 3000.0, 3500.0];
/// Substrate concentrations far below K_M.
pub const MM_DATASET_B: [f64; 5] = [2.0, 5.0, 10.0, 15.0, 20.0];

pub const ECOSYSTEM_QUARTERS: usize = 40;
pub const BR_DURATION_MS: usize = 500;

const MM_NAMES: [&str; 4] = ["k_cat", "[E_T]", "K_M", "epsilon"];

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn all_matrices() -> Vec<MatrixKind> {
    vec![MatrixKind::H, MatrixKind::L, MatrixKind::P, MatrixKind::G]
}

fn mm_config(inputs: &[f64], components: Vec<PriorComponent>, out: &Path) -> Result<PipelineConfig> {
    Ok(PipelineConfig {
        model: ModelName::MichaelisMenten,
        data: DataSource::Synth {
            seed: 1,
            noise: NoiseSpec::Heteroscedastic { epsilon: 0.25 },
            inputs: inputs.to_vec(),
            channels: vec![0],
            parameters: None,
        },
        prior: PriorSpec::new(names(&MM_NAMES), components)?,
        smc: Some(SmcConfig {
            particles: 5000,
            seed: 1,
            ..SmcConfig::default()
        }),
        mle: Some(MleOptions::default()),
        delta: 1e-3,
        matrices: all_matrices(),
        g_subsample: 500,
        threshold: 0.2,
        output: out.to_path_buf(),
    })
}

/// Uniform priors throughout; k_cat and [E_T] get equal log-widths.
pub fn mm_scenario_1(out: &Path) -> Result<PipelineConfig> {
    mm_config(
        &MM_DATASET_A,
        vec![
            PriorComponent::uniform("k_cat", 1.0, 1000.0),
            PriorComponent::uniform("[E_T]", 0.05, 50.0),
            PriorComponent::uniform("K_M", 1.0, 300.0),
            PriorComponent::uniform("epsilon", 0.01, 1.0),
        ],
        out,
    )
}

/// Log-normal priors; K_M tightly centred far below its true value.
pub fn mm_scenario_2(out: &Path) -> Result<PipelineConfig> {
    mm_config(
        &MM_DATASET_A,
        vec![
            PriorComponent::log_normal("k_cat", 80.0, 0.5),
            PriorComponent::log_normal("[E_T]", 6.0, 0.5),
            PriorComponent::log_normal("K_M", 10.0, 0.05),
            PriorComponent::log_normal("epsilon", 0.25, 0.5),
        ],
        out,
    )
}

/// Uniform k_cat, [E_T] tightly centred away from its true value, K_M tightly
/// centred on its true value.
pub fn mm_scenario_3(out: &Path) -> Result<PipelineConfig> {
    mm_config(
        &MM_DATASET_B,
        vec![
            PriorComponent::uniform("k_cat", 1.0, 1000.0),
            PriorComponent::log_normal("[E_T]", 1.5, 0.1),
            PriorComponent::log_normal("K_M", 146.7, 0.02),
            PriorComponent::log_normal("epsilon", 0.25, 0.3),
        ],
        out,
    )
}

/// Log-sd of the vague ecosystem prior.
pub const ECOSYSTEM_VAGUE_SD: f64 = 1.0;
/// Log-sd of the epsilon prior in both ecosystem presets.
pub const ECOSYSTEM_NOISE_SD: f64 = 0.5;
/// Log-sd of the informative priors on a_N, a_M, a_P.
pub const ECOSYSTEM_INFORMATIVE_SD: f64 = 0.05;

fn ecosystem_config(informative: bool, out: &Path) -> Result<PipelineConfig> {
    let mut comps: Vec<PriorComponent> = ECO_NAMES
        .iter()
        .zip(ECO_REFERENCE)
        .map(|(n, r)| {
            let sd = if informative && matches!(*n, "a_N" | "a_M" | "a_P") {
                ECOSYSTEM_INFORMATIVE_SD
            } else {
                ECOSYSTEM_VAGUE_SD
            };
            PriorComponent::log_normal(n, r, sd)
        })
        .collect();
    comps.push(PriorComponent::log_normal("epsilon", 0.25, ECOSYSTEM_NOISE_SD));
    let mut n = names(&ECO_NAMES);
    n.push("epsilon".into());
    Ok(PipelineConfig {
        model: ModelName::Ecosystem,
        data: DataSource::Synth {
            seed: 1,
            noise: NoiseSpec::Heteroscedastic { epsilon: 0.25 },
            inputs: (0..=ECOSYSTEM_QUARTERS).map(|t| t as f64).collect(),
            channels: vec![0, 1, 2, 3],
            parameters: None,
        },
        prior: PriorSpec::new(n, comps)?,
        smc: Some(SmcConfig {
            particles: 2000,
            seed: 1,
            ..SmcConfig::default()
        }),
        mle: Some(MleOptions::default()),
        delta: 1e-3,
        matrices: all_matrices(),
        g_subsample: 500,
        threshold: 0.2,
        output: out.to_path_buf(),
    })
}

pub fn ecosystem_vague(out: &Path) -> Result<PipelineConfig> {
    ecosystem_config(false, out)
}

pub fn ecosystem_informative(out: &Path) -> Result<PipelineConfig> {
    ecosystem_config(true, out)
}

/// Log-sd of the Beeler–Reuter prior, centred on the reference values.
pub const BR_PRIOR_SD: f64 = 0.1;

pub fn br_default(out: &Path) -> Result<PipelineConfig> {
    let model = BeelerReuter::new();
    let spec = model.spec();
    let mut comps: Vec<PriorComponent> = spec
        .estimated()
        .map(|e| PriorComponent::log_normal(&e.name, e.reference_value, BR_PRIOR_SD))
        .collect();
    comps.push(PriorComponent::log_normal("sigma", 2.0, BR_PRIOR_SD));
    let mut n = spec.estimated_names();
    n.push("sigma".into());
    Ok(PipelineConfig {
        model: ModelName::BeelerReuter,
        data: DataSource::Synth {
            seed: 1,
            noise: NoiseSpec::Homoscedastic { sigma: 2.0 },
            inputs: (0..=BR_DURATION_MS).map(|t| t as f64).collect(),
            channels: vec![0],
            parameters: None,
        },
        prior: PriorSpec::new(n, comps)?,
        smc: Some(SmcConfig {
            particles: 2000,
            seed: 1,
            ..SmcConfig::default()
        }),
        mle: Some(MleOptions {
            max_evaluations: 20_000,
            ..MleOptions::default()
        }),
        delta: 1e-3,
        matrices: all_matrices(),
        g_subsample: 200,
        threshold: 0.2,
        output: out.to_path_buf(),
    })
}

pub fn preset(name: &str, out: &Path) -> Result<PipelineConfig> {
    match name {
        "mm-scenario-1" => mm_scenario_1(out),
        "mm-scenario-2" => mm_scenario_2(out),
        "mm-scenario-3" => mm_scenario_3(out),
        "ecosystem-vague" => ecosystem_vague(out),
        "ecosystem-informative" => ecosystem_informative(out),
        "br-default" => br_default(out),
        other => Err(Error::Validation(format!(
            "unknown preset `{other}`; expected one of {}",
            PRESETS.join(", ")
        ))),
    }
}
