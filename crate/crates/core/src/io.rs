//! On-disk artifacts: dataset and ensemble CSVs with JSON sidecars, the MLE
//! record, sensitivity reports and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, NoiseSpec, ObservationGrid, ObservationPoint, Provenance};
use crate::error::{Error, Result};
use crate::inference::smc::{ParticleEnsemble, SmcDiagnostics};
use crate::sloppiness::SensitivityReport;

/// Full-precision scientific notation; round-trips every finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Path of the JSON sidecar next to a CSV file.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| io_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Parse {
        line: e.line(),
        reason: format!("{}: {e}", path.display()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetMeta {
    noise: NoiseSpec,
    provenance: Option<Provenance>,
}

pub fn dataset_csv_string(ds: &Dataset) -> String {
    let n = ds.grid().input_dim();
    let mut s = String::new();
    for i in 1..=n {
        s.push_str(&format!("x{i},"));
    }
    s.push_str("channel,y_obs\n");
    for (x, ch, y) in ds.records() {
        for v in x {
            s.push_str(&fmt_f64(*v));
            s.push(',');
        }
        s.push_str(&format!("{ch},{}\n", fmt_f64(y)));
    }
    s
}

/// Writes `x1..xn,channel,y_obs` rows plus a sidecar holding noise and provenance.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, dataset_csv_string(ds)).map_err(|e| io_err(path, e))?;
    write_json(
        &DatasetMeta {
            noise: ds.noise(),
            provenance: ds.provenance().cloned(),
        },
        &sidecar_path(path),
    )
}

fn parse_field(s: &str, line: usize, col: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        reason: format!("column `{col}`: `{s}` is not a number"),
    })
}

/// Parses dataset CSV text. `noise` supplies the noise scheme the CSV itself lacks.
pub fn parse_dataset_csv(text: &str, noise: NoiseSpec, provenance: Option<Provenance>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, reason: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let n = header.len().saturating_sub(2);
    let expected: Vec<String> = (1..=n)
        .map(|i| format!("x{i}"))
        .chain(["channel".to_string(), "y_obs".to_string()])
        .collect();
    if header.len() < 3 || header != expected {
        return Err(Error::Parse {
            line: 1,
            reason: format!("header must be `x1..xn,channel,y_obs`, got `{}`", header.join(",")),
        });
    }
    let mut points = Vec::new();
    let mut ys = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                reason: format!("expected {} fields, got {}", header.len(), rec.len()),
            });
        }
        let x = (0..n)
            .map(|i| parse_field(&rec[i], line, &header[i]))
            .collect::<Result<Vec<_>>>()?;
        let channel = rec[n].trim().parse::<usize>().map_err(|_| Error::Parse {
            line,
            reason: format!("column `channel`: `{}` is not a non-negative integer", &rec[n]),
        })?;
        let y = parse_field(&rec[n + 1], line, "y_obs")?;
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse { line, reason: "non-finite value".into() });
        }
        points.push(ObservationPoint { x, channel });
        ys.push(y);
    }
    if points.is_empty() {
        return Err(Error::Validation("dataset has no observations".into()));
    }
    Dataset::new(ObservationGrid::new(points)?, ys, noise, provenance)
}

/// Reads a dataset CSV. The noise scheme comes from `noise` when given,
/// otherwise from the sidecar written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &Path, noise: Option<NoiseSpec>) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let side = sidecar_path(path);
    let meta: Option<DatasetMeta> = if side.exists() { Some(read_json(&side)?) } else { None };
    let noise = match (noise, &meta) {
        (Some(n), _) => n,
        (None, Some(m)) => m.noise,
        (None, None) => {
            return Err(Error::Validation(format!(
                "{}: no noise scheme given and no sidecar {}",
                path.display(),
                side.display()
            )))
        }
    };
    parse_dataset_csv(&text, noise, meta.and_then(|m| m.provenance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnsembleMeta {
    noise_dims: usize,
    temperature: f64,
    diagnostics: SmcDiagnostics,
}

pub fn ensemble_csv_string(ens: &ParticleEnsemble) -> String {
    let mut s = ens.names().join(",");
    s.push_str(",log_likelihood\n");
    for (p, ll) in ens.particles().iter().zip(ens.log_likelihoods()) {
        for v in p {
            s.push_str(&fmt_f64(*v));
            s.push(',');
        }
        s.push_str(&fmt_f64(*ll));
        s.push('\n');
    }
    s
}

/// One particle per row plus its log-likelihood; diagnostics go to the sidecar.
pub fn write_ensemble_csv(ens: &ParticleEnsemble, path: &Path) -> Result<()> {
    fs::write(path, ensemble_csv_string(ens)).map_err(|e| io_err(path, e))?;
    write_json(
        &EnsembleMeta {
            noise_dims: ens.noise_dims(),
            temperature: ens.temperature(),
            diagnostics: ens.diagnostics().clone(),
        },
        &sidecar_path(path),
    )
}

pub fn read_ensemble_csv(path: &Path) -> Result<ParticleEnsemble> {
    let meta: EnsembleMeta = read_json(&sidecar_path(path))?;
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, reason: e.to_string() })?
        .iter()
        .map(String::from)
        .collect();
    if header.last().map(String::as_str) != Some("log_likelihood") || header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            reason: "last column must be `log_likelihood`".into(),
        });
    }
    let d = header.len() - 1;
    let mut particles = Vec::new();
    let mut lls = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = (0..=d)
            .map(|i| parse_field(&rec[i], line, &header[i]))
            .collect::<Result<Vec<_>>>()?;
        lls.push(row[d]);
        particles.push(row[..d].to_vec());
    }
    let mut ens = ParticleEnsemble::new(header[..d].to_vec(), meta.noise_dims, particles, lls)?;
    ens.set_diagnostics(meta.diagnostics);
    Ok(ens)
}

/// Best-fit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaStar {
    pub parameters: Vec<String>,
    pub theta: Vec<f64>,
    pub cost: f64,
    pub start: Vec<f64>,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
}

pub fn write_report(report: &SensitivityReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn read_report(path: &Path) -> Result<SensitivityReport> {
    read_json(path)
}

/// `rank,lambda,lambda_rel` table of a report.
pub fn emit_spectrum_table(report: &SensitivityReport, path: &Path) -> Result<()> {
    fs::write(path, report.spectrum_csv()).map_err(|e| io_err(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub model: String,
    pub synth_seed: Option<u64>,
    pub smc_seed: Option<u64>,
    pub subsample_seed: u64,
    pub status: String,
    pub artifacts: Vec<ArtifactEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Hashes every regular file in `dir` except the manifest itself, sorted by name.
pub fn collect_artifacts(dir: &Path) -> Result<Vec<ArtifactEntry>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE)
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let p = dir.join(&n);
            let bytes = fs::metadata(&p).map_err(|e| io_err(&p, e))?.len();
            Ok(ArtifactEntry {
                sha256: sha256_file(&p)?,
                path: n,
                bytes,
            })
        })
        .collect()
}
