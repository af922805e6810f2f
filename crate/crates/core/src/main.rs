use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbalign::iocli::{self, config::keys_help, RawConfig, RunConfig};
use cbalign::Error;

#[derive(Parser)]
#[command(name = "cbalign", version, about = "Compressive mm-wave beam alignment", after_long_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a ground-truth power map (CSV + PGM heatmap) and its codebooks.
    Synth(Overrides),
    /// Run the Monte Carlo sweep and write aggregate/per-trial results.
    Run(Overrides),
    /// Same as `run`; kept for multi-fraction sweeps.
    Sweep(Overrides),
    /// Validate a measured power grid CSV and print a summary.
    IngestCheck {
        path: PathBuf,
        /// Power column is dBm (1 mW reference).
        #[arg(long)]
        db: bool,
    },
}

#[derive(Args)]
struct Overrides {
    /// Flat key = value config file; see `--help` for keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated measurement fractions m/n.
    #[arg(long)]
    fractions: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Grid input values are dBm.
    #[arg(long)]
    db: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path).map_err(|e| match e {
                Error::Io { path, source } => Error::InvalidArgument(format!(
                    "cannot read config {}: {source}",
                    path.display()
                )),
                other => other,
            })?,
            None => RawConfig::default(),
        };
        if let Some(v) = self.seed {
            raw.set("seed", &v.to_string())?;
        }
        if let Some(v) = &self.fractions {
            raw.set("fractions", v)?;
        }
        if let Some(v) = self.trials {
            raw.set("trials", &v.to_string())?;
        }
        if let Some(v) = self.noise_sigma {
            raw.set("noise_sigma", &v.to_string())?;
        }
        if let Some(v) = self.kappa {
            raw.set("kappa", &v.to_string())?;
            raw.set("penalty", "")?;
        }
        if self.db {
            raw.set("grid_db", "true")?;
        }
        if let Some(v) = &self.out {
            raw.set("out", &v.to_string_lossy())?;
        }
        raw.resolve()
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth(o) => {
            let cfg = o.resolve()?;
            let summary = iocli::cmd_synth(&cfg)?;
            println!(
                "wrote {}x{} map to {}",
                summary.map.q(),
                summary.map.p(),
                cfg.out.display()
            );
        }
        Command::Run(o) | Command::Sweep(o) => {
            let cfg = o.resolve()?;
            let summary = iocli::cmd_run(&cfg)?;
            println!(
                "{:>8} {:>4} {:>4} {:>12} {:>10} {:>8}",
                "m/n", "m1", "m2", "nmse", "loss_dB", "hits"
            );
            for r in &summary.rows {
                println!(
                    "{:>8.4} {:>4} {:>4} {:>12.4e} {:>10.3} {:>8.3}",
                    r.fraction, r.m1, r.m2, r.mean_nmse, r.mean_rss_loss_db, r.hit_rate
                );
            }
            println!("results in {}", cfg.out.display());
        }
        Command::IngestCheck { path, db } => {
            println!("{}", iocli::cmd_ingest_check(&path, db)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(iocli::exit_code(&err) as u8)
        }
    }
}
