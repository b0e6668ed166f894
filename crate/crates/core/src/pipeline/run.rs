use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use crate::data::{Dataset, ObservationGrid};
use crate::error::{Error, Result};
use crate::inference::{mle_fit, smc_sample, LogLikelihood, ModelLikelihood, ParticleEnsemble};
use crate::io::{self, Manifest, ThetaStar};
use crate::model::Model;
use crate::sloppiness::{
    build_report, hessian_h, lis_matrix_g, lm_hessian_l, pca_matrix_p, LisOptions, MatrixKind, SensitivityReport,
};
use crate::synth::synthesize;

use super::config::{DataSource, PipelineConfig};

pub const CONFIG_FILE: &str = "config.json";
pub const DATASET_FILE: &str = "dataset.csv";
pub const ENSEMBLE_FILE: &str = "ensemble.csv";
pub const THETA_STAR_FILE: &str = "theta_star.json";

pub fn report_file(kind: MatrixKind) -> String {
    format!("report_{kind}.json")
}

pub fn spectrum_file(kind: MatrixKind) -> String {
    format!("spectrum_{kind}.csv")
}

/// Runs `f`, wrapping any error with the stage name.
pub fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t0 = Instant::now();
    let r = f().map_err(|e| Error::Stage {
        stage: name.to_string(),
        source: Box::new(e),
    });
    info!("stage {name} finished in {:.2?}", t0.elapsed());
    r
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dataset: Dataset,
    pub ensemble: Option<ParticleEnsemble>,
    pub theta_star: Option<ThetaStar>,
    pub reports: Vec<SensitivityReport>,
}

impl RunSummary {
    pub fn report(&self, kind: MatrixKind) -> Option<&SensitivityReport> {
        self.reports.iter().find(|r| r.kind == kind)
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    model: Box<dyn Model>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.model.build();
        Ok(Self { cfg, model })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn model(&self) -> &dyn Model {
        self.model.as_ref()
    }

    pub fn out_dir(&self) -> &Path {
        &self.cfg.output
    }

    fn path(&self, file: &str) -> PathBuf {
        self.cfg.output.join(file)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.cfg.output).map_err(|e| Error::Io(format!("{}: {e}", self.cfg.output.display())))?;
        io::write_json(&self.cfg, &self.path(CONFIG_FILE))
    }

    /// Synthesises or reads the dataset named by the config.
    pub fn dataset(&self) -> Result<Dataset> {
        let ds = match &self.cfg.data {
            DataSource::Synth {
                seed,
                noise,
                inputs,
                channels,
                parameters,
            } => {
                let grid = ObservationGrid::product(inputs, channels)?;
                let theta = parameters
                    .clone()
                    .unwrap_or_else(|| self.model.spec().reference_vector().0);
                synthesize(self.model.as_ref(), &theta, &grid, *noise, *seed)?
            }
            DataSource::Csv { path, noise } => io::read_dataset_csv(path, *noise)?,
        };
        let want = ds.noise().parameter_name();
        if self.cfg.prior.names().last().map(String::as_str) != Some(want) {
            return Err(Error::Validation(format!(
                "dataset noise parameter is `{want}` but the prior's last parameter is `{}`",
                self.cfg.prior.names().last().cloned().unwrap_or_default()
            )));
        }
        Ok(ds)
    }

    pub fn sample(&self, ds: &Dataset) -> Result<ParticleEnsemble> {
        let smc = self
            .cfg
            .smc
            .as_ref()
            .ok_or_else(|| Error::Validation("sampling is disabled in this config".into()))?;
        let lik = ModelLikelihood::new(self.model.as_ref(), ds);
        smc_sample(&lik, &self.cfg.prior, smc)
    }

    /// MLE from the posterior mean when an ensemble exists, else the prior median.
    pub fn fit(&self, ds: &Dataset, ens: Option<&ParticleEnsemble>) -> Result<ThetaStar> {
        let opts = self
            .cfg
            .mle
            .ok_or_else(|| Error::Validation("fitting is disabled in this config".into()))?;
        let lik = ModelLikelihood::new(self.model.as_ref(), ds);
        let bounds = self.cfg.prior.log_bounds();
        let start: Vec<f64> = ens
            .map(|e| e.mean())
            .unwrap_or_else(|| self.cfg.prior.median())
            .iter()
            .zip(&bounds)
            .map(|(v, (lo, hi))| v.ln().clamp(*lo, *hi).exp())
            .collect();
        let names = lik.names();
        match mle_fit(&lik, &start, &bounds, &opts) {
            Ok(r) => Ok(ThetaStar {
                parameters: names,
                theta: r.theta,
                cost: r.cost,
                start,
                evaluations: r.evaluations,
                restarts: r.restarts,
                converged: true,
            }),
            Err(Error::NotConverged {
                evaluations,
                best_cost,
                best_point,
            }) => {
                warn!("MLE did not converge after {evaluations} evaluations; using the best point found");
                Ok(ThetaStar {
                    parameters: names,
                    theta: best_point,
                    cost: best_cost,
                    start,
                    evaluations,
                    restarts: 0,
                    converged: false,
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn matrix_report(
        &self,
        kind: MatrixKind,
        ds: &Dataset,
        ens: Option<&ParticleEnsemble>,
        theta_star: Option<&ThetaStar>,
    ) -> Result<SensitivityReport> {
        let lik = ModelLikelihood::new(self.model.as_ref(), ds);
        let need_theta = || theta_star.ok_or_else(|| Error::Validation(format!("{kind} needs a best fit")));
        let need_ens = || ens.ok_or_else(|| Error::Validation(format!("{kind} needs an ensemble")));
        let m = match kind {
            MatrixKind::H => hessian_h(&lik, &need_theta()?.theta, self.cfg.delta)?,
            MatrixKind::L => lm_hessian_l(&lik, &need_theta()?.theta, self.cfg.delta)?,
            MatrixKind::P => pca_matrix_p(need_ens()?)?,
            MatrixKind::G => {
                let smc = self.cfg.smc.unwrap_or_default();
                let opts = LisOptions {
                    delta: self.cfg.delta,
                    subsample: self.cfg.g_subsample,
                    seed: smc.seed,
                    parallelism: smc.parallelism,
                };
                lis_matrix_g(need_ens()?, &self.cfg.prior, &lik, &opts)?
            }
        };
        build_report(&m, self.cfg.threshold)
    }

    pub fn analyze(
        &self,
        ds: &Dataset,
        ens: Option<&ParticleEnsemble>,
        theta_star: Option<&ThetaStar>,
    ) -> Result<Vec<SensitivityReport>> {
        self.cfg
            .matrices
            .iter()
            .map(|&k| self.matrix_report(k, ds, ens, theta_star))
            .collect()
    }

    // Artifact-level steps, each readable back by the next.

    pub fn write_dataset(&self, ds: &Dataset) -> Result<()> {
        self.ensure_out_dir()?;
        io::write_dataset_csv(ds, &self.path(DATASET_FILE))
    }

    /// The dataset previously written to the run directory, or a fresh one.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let p = self.path(DATASET_FILE);
        if p.exists() {
            let ds = io::read_dataset_csv(&p, None)?;
            Ok(ds)
        } else {
            self.dataset()
        }
    }

    pub fn load_ensemble(&self) -> Result<Option<ParticleEnsemble>> {
        let p = self.path(ENSEMBLE_FILE);
        if p.exists() {
            io::read_ensemble_csv(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn load_theta_star(&self) -> Result<Option<ThetaStar>> {
        let p = self.path(THETA_STAR_FILE);
        if p.exists() {
            io::read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn write_reports(&self, reports: &[SensitivityReport]) -> Result<()> {
        self.ensure_out_dir()?;
        for r in reports {
            io::write_report(r, &self.path(&report_file(r.kind)))?;
            io::emit_spectrum_table(r, &self.path(&spectrum_file(r.kind)))?;
        }
        Ok(())
    }

    pub fn write_manifest(&self, status: &str) -> Result<Manifest> {
        self.ensure_out_dir()?;
        let synth_seed = match &self.cfg.data {
            DataSource::Synth { seed, .. } => Some(*seed),
            DataSource::Csv { .. } => None,
        };
        let m = Manifest {
            tool: "sloppy".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            model: self.model.name().into(),
            synth_seed,
            smc_seed: self.cfg.smc.map(|s| s.seed),
            subsample_seed: self.cfg.smc.map_or(0, |s| s.seed),
            status: status.into(),
            artifacts: io::collect_artifacts(&self.cfg.output)?,
        };
        io::write_json(&m, &self.path(io::MANIFEST_FILE))?;
        Ok(m)
    }

    /// Every stage in order, writing artifacts as they become available.
    pub fn run(&self) -> Result<RunSummary> {
        let r = self.run_stages();
        let status = match &r {
            Ok(_) => "ok".to_string(),
            Err(Error::Stage { stage, .. }) => format!("failed at {stage}"),
            Err(_) => "failed".to_string(),
        };
        let m = self.write_manifest(&status);
        let summary = r?;
        m?;
        Ok(summary)
    }

    fn run_stages(&self) -> Result<RunSummary> {
        stage("setup", || self.ensure_out_dir())?;
        let ds = stage("synth", || {
            let ds = self.dataset()?;
            self.write_dataset(&ds)?;
            Ok(ds)
        })?;
        let ensemble = match self.cfg.smc {
            Some(_) if self.cfg.needs_ensemble() || self.cfg.mle.is_some() => Some(stage("sample", || {
                let e = self.sample(&ds)?;
                io::write_ensemble_csv(&e, &self.path(ENSEMBLE_FILE))?;
                Ok(e)
            })?),
            _ => None,
        };
        let theta_star = match self.cfg.mle {
            Some(_) => Some(stage("fit", || {
                let t = self.fit(&ds, ensemble.as_ref())?;
                io::write_json(&t, &self.path(THETA_STAR_FILE))?;
                Ok(t)
            })?),
            None => None,
        };
        let reports = stage("analyze", || self.analyze(&ds, ensemble.as_ref(), theta_star.as_ref()))?;
        stage("report", || self.write_reports(&reports))?;
        Ok(RunSummary {
            dataset: ds,
            ensemble,
            theta_star,
            reports,
        })
    }
}
