use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use sloppy_core::io;
use sloppy_core::pipeline::{preset, report_file, stage, Pipeline, PipelineConfig, PRESETS};
use sloppy_core::sloppiness::{MatrixKind, SensitivityReport};
use sloppy_core::Error;

#[derive(Parser, Debug)]
#[command(name = "sloppy", version, about = "Fit mechanistic models and analyse their sloppiness")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in scenario instead of a config file.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory; overrides the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate (or load) the dataset and write it to the run directory.
    Synth,
    /// Draw the posterior ensemble with SMC.
    Sample,
    /// Maximum-likelihood fit, started at the posterior mean when an ensemble exists.
    Fit,
    /// Compute the configured sensitivity matrices and their reports.
    Analyze,
    /// All stages in order.
    Run,
    /// Print the reports found in the run directory.
    Report,
    /// Print a preset's config as JSON.
    Preset { name: String },
}

/// Exit status for a failure.
fn exit_code(e: &Error) -> u8 {
    let numeric = matches!(
        e.root(),
        Error::Numeric { .. }
            | Error::Domain { .. }
            | Error::ModelOutput(_)
            | Error::Likelihood(_)
            | Error::Matrix(_)
            | Error::Singular { .. }
            | Error::NotConverged { .. }
            | Error::Degenerate(_)
            | Error::MoveFailure { .. }
            | Error::Stencil { .. }
            | Error::EmptyEigenparameter { .. }
    );
    match e {
        _ if numeric => 3,
        Error::Stage { .. } => 4,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("run"));
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(p), _) => PipelineConfig::load(p)?,
        (None, Some(name)) => preset(name, &out)?,
        (None, None) => {
            return Err(Error::Validation(format!(
                "pass --config <file> or --preset <{}>",
                PRESETS.join("|")
            )))
        }
    };
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(r: &SensitivityReport) {
    println!("{} ({})", r.kind, r.context);
    for (k, (l, rel)) in r.eigenvalues.iter().zip(&r.rescaled_eigenvalues).enumerate() {
        let ep = r
            .eigenparameter(k + 1)
            .map_or_else(|| "-".to_string(), |e| e.display.clone());
        println!("  {:>3}  {:>12.4e}  {:>10.3e}  {}", k + 1, l, rel, ep);
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Command::Preset { name } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("run"));
        let mut cfg = preset(name, &out)?;
        if let Some(s) = cli.seed {
            cfg.set_seed(s);
        }
        println!("{}", cfg.to_json());
        return Ok(());
    }
    if let Command::Report = &cli.command {
        let dir = match (&cli.out, &cli.config, &cli.preset) {
            (Some(o), _, _) => o.clone(),
            _ => load_config(cli)?.output,
        };
        let mut found = false;
        for kind in [MatrixKind::H, MatrixKind::L, MatrixKind::P, MatrixKind::G] {
            let p = dir.join(report_file(kind));
            if p.exists() {
                print_report(&io::read_report(&p)?);
                found = true;
            }
        }
        if !found {
            return Err(Error::Validation(format!("no reports in {}", dir.display())));
        }
        return Ok(());
    }

    let pipe = Pipeline::new(load_config(cli)?)?;
    match &cli.command {
        Command::Synth => {
            let ds = stage("synth", || {
                let ds = pipe.dataset()?;
                pipe.write_dataset(&ds)?;
                Ok(ds)
            })?;
            println!("{} observations written to {}", ds.len(), pipe.out_dir().display());
        }
        Command::Sample => {
            let ds = stage("synth", || {
                let ds = pipe.load_dataset()?;
                pipe.write_dataset(&ds)?;
                Ok(ds)
            })?;
            let ens = stage("sample", || {
                let e = pipe.sample(&ds)?;
                io::write_ensemble_csv(&e, &pipe.out_dir().join(sloppy_core::pipeline::ENSEMBLE_FILE))?;
                Ok(e)
            })?;
            println!(
                "{} particles after {} tempering stages",
                ens.len(),
                ens.diagnostics().temperatures.len() - 1
            );
            for ((n, m), cv) in ens.names().iter().zip(ens.mean()).zip(ens.coefficient_of_variation()) {
                println!("  {n:>10}  mean {m:>12.5e}  cv {:>6.1}%", 100.0 * cv);
            }
        }
        Command::Fit => {
            let ds = stage("synth", || pipe.load_dataset())?;
            let t = stage("fit", || {
                let ens = pipe.load_ensemble()?;
                let t = pipe.fit(&ds, ens.as_ref())?;
                io::write_json(&t, &pipe.out_dir().join(sloppy_core::pipeline::THETA_STAR_FILE))?;
                Ok(t)
            })?;
            println!("cost {:.6e} after {} evaluations", t.cost, t.evaluations);
            for (n, v) in t.parameters.iter().zip(&t.theta) {
                println!("  {n:>10}  {v:.6e}");
            }
        }
        Command::Analyze => {
            let reports = stage("analyze", || {
                let ds = pipe.load_dataset()?;
                let ens = pipe.load_ensemble()?;
                let t = pipe.load_theta_star()?;
                pipe.analyze(&ds, ens.as_ref(), t.as_ref())
            })?;
            stage("report", || pipe.write_reports(&reports))?;
            reports.iter().for_each(print_report);
        }
        Command::Run => {
            let s = pipe.run()?;
            s.reports.iter().for_each(print_report);
            info!("artifacts in {}", pipe.out_dir().display());
            return Ok(());
        }
        Command::Report | Command::Preset { .. } => unreachable!(),
    }
    pipe.write_manifest("ok")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
