//! Command-line interface. The binary is a thin wrapper: every
//! subcommand parses flags, loads the config, and calls into the library.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::csvio::fmt_f64;
use crate::dmd::{fit_dmd, forecast, DmdModel, SnapshotEnsemble};
use crate::error::{Error, Result};
use crate::pipeline::{
    deform_and_morph, run_dyas, run_gpr_compare, run_pipeline, sensitivity_sweeps,
};
use crate::sample::sample_parameters;
use crate::shape::ParameterVector;
use crate::subspace::parameter_names;
use crate::surrogate::run_ensemble;

#[derive(Parser)]
#[command(
    name = "foilrom",
    version,
    about = "Reduced-order design pipeline for a parametrized airfoil: bump deformation, \
             RBF mesh morphing, DMD forecasting, dynamic active subspaces, and dual GPR \
             response surfaces over the full and reduced parameter spaces."
)]
pub struct Cli {
    /// TOML config file; built-in defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Draw parameter samples and write samples.csv.
    Sample {
        /// Number of samples (defaults to n_train).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Deform the reference profile by a weight vector and morph the mesh.
    Deform {
        /// Comma-separated weights, e.g. --mu 0.01,0,0,...,0 (defaults to
        /// all zeros).
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_hyphen_values = true)]
        mu: Option<Vec<f64>>,
    },
    /// Evaluate the surrogate ensemble over the training window.
    FomRun,
    /// Fit the DMD model on an ensemble CSV.
    DmdFit {
        /// Ensemble CSV (defaults to <out>/ensemble.csv).
        #[arg(long)]
        ensemble: Option<PathBuf>,
    },
    /// Forecast future states from a fitted model.
    DmdForecast {
        /// Model JSON (defaults to <out>/dmd_model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated forecast times (defaults to forecast.times).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        times: Option<Vec<f64>>,
    },
    /// Dynamic active-subspace analysis and parameter freezing.
    Dyas,
    /// Full- vs reduced-space GPR comparison at the evaluation times.
    GprCompare,
    /// Run the whole pipeline.
    Pipeline,
    /// Sensitivity sweeps: DMD sampling period and GPR training size.
    Sweeps,
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_path(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    let quiet = cli.quiet;
    let say = |msg: String| {
        if !quiet {
            println!("{msg}");
        }
    };

    match cli.command {
        Command::Sample { n } => {
            let dom = cfg.domain()?;
            let n = n.unwrap_or(cfg.n_train);
            let samples = sample_parameters(&dom, n, cfg.seed, cfg.sampling);
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("samples.csv");
            let mut w = BufWriter::new(File::create(&path)?);
            write!(w, "sample_id")?;
            for name in parameter_names(dom.dim()) {
                write!(w, ",{name}")?;
            }
            writeln!(w)?;
            for (i, mu) in samples.iter().enumerate() {
                write!(w, "s{}", i + 1)?;
                for v in mu.values() {
                    write!(w, ",{}", fmt_f64(*v))?;
                }
                writeln!(w)?;
            }
            say(format!("wrote {n} samples to {}", path.display()));
        }
        Command::Deform { mu } => {
            let dom = cfg.domain()?;
            let mu = ParameterVector::new(mu.unwrap_or_else(|| vec![0.0; dom.dim()]));
            let (profile, mesh) = deform_and_morph(&cfg, &mu)?;
            say(format!(
                "deformed profile ({} stations) and morphed mesh ({} points) written to {}",
                profile.n_stations(),
                mesh.len(),
                cfg.output_dir.display()
            ));
        }
        Command::FomRun => {
            let dom = cfg.domain()?;
            let spec = cfg.surrogate_spec()?;
            let grid = cfg.time_grid()?;
            let train = sample_parameters(&dom, cfg.n_train, cfg.seed, cfg.sampling);
            let ens = run_ensemble(&spec, &dom, &train, &grid)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("ensemble.csv");
            let mut w = BufWriter::new(File::create(&path)?);
            ens.write_csv(&mut w)?;
            say(format!(
                "evaluated {} samples x {} instants into {}",
                ens.n_samples(),
                ens.n_instants(),
                path.display()
            ));
        }
        Command::DmdFit { ensemble } => {
            let path = ensemble.unwrap_or_else(|| cfg.output_dir.join("ensemble.csv"));
            let ens = SnapshotEnsemble::read_csv(File::open(&path).map_err(|e| {
                Error::Config(format!(
                    "cannot open ensemble '{}': {e}; run `foilrom fom-run` first",
                    path.display()
                ))
            })?)?;
            let model = fit_dmd(&ens, &cfg.rank_spec()?)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let out = cfg.output_dir.join("dmd_model.json");
            model.save(&out)?;
            say(format!(
                "fitted rank-{} model on {} snapshots, saved to {}",
                model.rank(),
                ens.n_instants(),
                out.display()
            ));
        }
        Command::DmdForecast { model, times } => {
            let path = model.unwrap_or_else(|| cfg.output_dir.join("dmd_model.json"));
            let model = DmdModel::load(&path).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!(
                    "cannot open model '{}': {io}; run `foilrom dmd-fit` first",
                    path.display()
                )),
                other => other,
            })?;
            let times = times.unwrap_or_else(|| cfg.forecast.times.clone());
            std::fs::create_dir_all(&cfg.output_dir)?;
            let out = cfg.output_dir.join("forecasts.csv");
            let mut w = BufWriter::new(File::create(&out)?);
            write!(w, "t")?;
            for i in 1..=model.state_dim() {
                write!(w, ",s{i}")?;
            }
            writeln!(w)?;
            for &t in &times {
                let values = forecast(&model, t)?;
                write!(w, "{}", fmt_f64(t))?;
                for v in values {
                    write!(w, ",{}", fmt_f64(v))?;
                }
                writeln!(w)?;
            }
            say(format!(
                "forecast {} instants into {}",
                times.len(),
                out.display()
            ));
        }
        Command::Dyas => {
            let (series, frozen) = run_dyas(&cfg)?;
            let names = parameter_names(series.subspaces()[0].dim());
            let frozen_names: Vec<&str> = frozen.iter().map(|&j| names[j].as_str()).collect();
            say(format!(
                "analyzed {} instants; frozen parameters (threshold {}): {:?}",
                series.len(),
                cfg.dyas.freeze_threshold,
                frozen_names
            ));
        }
        Command::GprCompare => {
            let errors = run_gpr_compare(&cfg)?;
            if !quiet {
                println!("{:>8} {:>14} {:>14}", "t", "full", "reduced");
                for e in &errors {
                    println!("{:>8} {:>14.6e} {:>14.6e}", e.t, e.full, e.reduced);
                }
            }
        }
        Command::Pipeline => {
            let report = run_pipeline(&cfg)?;
            if !quiet {
                let names: Vec<&str> = report
                    .frozen_parameters
                    .iter()
                    .map(|f| f.name.as_str())
                    .collect();
                println!(
                    "pipeline done: DMD rank {}, training residual {:.3e}, frozen {:?}",
                    report.dmd.rank, report.dmd.training_residual, names
                );
                if let Some(last) = report.errors.last() {
                    println!(
                        "t = {}: full-space error {:.3e}, reduced-space error {:.3e}",
                        last.t, last.full, last.reduced
                    );
                }
                for (stage, secs) in &report.timings {
                    println!("  {stage:<10} {secs:.3} s");
                }
                println!("artifacts in {}", cfg.output_dir.display());
            }
        }
        Command::Sweeps => {
            let tables = sensitivity_sweeps(&cfg)?;
            say(format!(
                "wrote sweep_dmd_dt.csv ({} rows) and sweep_gpr_train.csv ({} rows) to {}",
                tables.dmd_dt.len(),
                tables.gpr_train.len(),
                cfg.output_dir.display()
            ));
        }
    }
    Ok(())
}
