//! One end-to-end run: data, posterior sample, best fit, sensitivity reports.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{DataSource, ModelName, PipelineConfig};
pub use presets::{preset, PRESETS};
pub use run::{report_file, spectrum_file, stage, Pipeline, RunSummary, DATASET_FILE, ENSEMBLE_FILE, THETA_STAR_FILE};
