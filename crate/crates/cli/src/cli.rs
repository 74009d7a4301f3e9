use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use evoadam_core::config::ExperimentConfig;
use evoadam_core::metrics::fmt_f64;

use crate::commands;
use crate::config::load_config;

/// Hybrid EA-Adam multi-objective training, fusion and Pareto metrics.
#[derive(Debug, Parser)]
#[command(name = "evoadam", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train θ_G0 on f1 only.
    Pretrain {
        /// TOML config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// EA-Adam run over the λ grid.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Start from this generator checkpoint instead of pretraining.
        #[arg(long)]
        theta_g0: Option<PathBuf>,
    },
    /// Adam-only models over the same λ grid and step budget.
    Baseline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta_g0: Option<PathBuf>,
    },
    /// Fuse the experts of a toy-sr train run and build the fusion baselines.
    Fuse {
        /// Run directory written by `train`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Objective values of a generator checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to the config.toml of the checkpoint's run directory.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export front.csv from a run log.
    Front {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Epoch to export; the last one by default.
        #[arg(long)]
        epoch: Option<usize>,
    },
    /// Hypervolume and IGD of two fronts (run directories or front.csv files).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_or_default(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    })
}

pub fn run(cli: Cli) -> Result<String> {
    Ok(match cli.command {
        Command::Pretrain { config, out } => {
            commands::pretrain(&config_or_default(config.as_ref())?, &out)?;
            format!("wrote {}", out.display())
        }
        Command::Train { config, out, theta_g0 } => {
            commands::train(&config_or_default(config.as_ref())?, &out, theta_g0.as_deref())?;
            format!("wrote {}", out.display())
        }
        Command::Baseline { config, out, theta_g0 } => {
            commands::baseline(&config_or_default(config.as_ref())?, &out, theta_g0.as_deref())?;
            format!("wrote {}", out.display())
        }
        Command::Fuse { run, out } => {
            commands::fuse(&run, &out)?;
            format!("wrote {}", out.display())
        }
        Command::Eval { checkpoint, config, out } => {
            let v = commands::eval(&checkpoint, config.as_deref(), out.as_deref())?;
            format!("f1 {} f2 {}", fmt_f64(v.f1), fmt_f64(v.f2))
        }
        Command::Front { log, out, epoch } => {
            let f = commands::front(&log, &out, epoch)?;
            format!("wrote {} points to {}", f.len(), out.display())
        }
        Command::Compare { a, b, out } => {
            let c = commands::compare(&a, &b, out.as_deref())?;
            c.report(&a.display().to_string(), &b.display().to_string())
        }
    })
}
