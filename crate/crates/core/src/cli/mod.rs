//! Command-line front end: `eigensweep`, `propagate` and `poincare`.

pub mod config;
pub mod eigensweep;
pub mod poincare;
pub mod propagate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use config::RawConfig;

#[derive(Debug, Parser)]
#[command(name = "robnik-fiber", version, about = "Transverse-mode entanglement in Robnik-billiard fibers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for independent sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Turn warnings (e.g. a truncated launch packet) into errors.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Lowest eigenmodes and their radial-angular entropies across deformations.
    Eigensweep,
    /// Propagate the launch packet and record the entropy along z.
    Propagate,
    /// Ray-billiard Poincaré sections and coverage.
    Poincare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigensweep => "eigensweep",
            Command::Propagate => "propagate",
            Command::Poincare => "poincare",
        }
    }
}

/// Parses the configuration, runs the command and writes the manifest.
pub fn execute(cli: &Cli) -> Result<PathBuf> {
    let raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    // validate before spending any time
    enum Parsed {
        Eigen(eigensweep::EigensweepConfig),
        Prop(propagate::PropagateConfig),
        Poin(poincare::PoincareConfig),
    }
    let parsed = match cli.command {
        Command::Eigensweep => Parsed::Eigen(eigensweep::EigensweepConfig::from_raw(raw)?),
        Command::Propagate => Parsed::Prop(propagate::PropagateConfig::from_raw(raw)?),
        Command::Poincare => Parsed::Poin(poincare::PoincareConfig::from_raw(raw)?),
    };
    std::fs::create_dir_all(&cli.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cli.jobs)))?;
    let manifest = pool.install(|| match &parsed {
        Parsed::Eigen(c) => eigensweep::run(c, &cli.out),
        Parsed::Prop(c) => propagate::run(c, &cli.out, cli.strict),
        Parsed::Poin(c) => poincare::run(c, &cli.out),
    })?;
    log::info!("{} wrote {} files", cli.command.name(), manifest.entries().len());
    manifest.finish()
}
