//! `crystal-qaoa`: generate instances, solve them exactly, and run QAOA
//! sampling experiments under several angle-setting strategies.

mod commands;
mod config;
mod experiment;
mod transfer;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Strategy};

#[derive(Parser)]
#[command(name = "crystal-qaoa", version, about)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Globals {
    /// Master seed; every RNG stream derives from it (default 1)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per sampled run (default 100000)
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Directory for experiment artifacts (default "out")
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Qubit/site ceiling for simulation and exhaustive search (default 28)
    #[arg(long, global = true)]
    max_qubits: Option<usize>,
    /// Concurrent sweep cells (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a lattice spec or draw a random model into an instance file
    Generate {
        /// Lattice spec JSON to compile
        #[arg(long, conflicts_with = "random_n")]
        lattice: Option<PathBuf>,
        /// Draw a fully connected random instance with this many sites
        #[arg(long)]
        random_n: Option<usize>,
        /// Coefficient scale for random instances
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Where to write the instance JSON
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Enumerate all configurations and write the exact spectrum floor
    SolveExact {
        /// Instance or lattice spec file
        instance: PathBuf,
        /// Write the spectrum JSON here instead of stdout
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Sweep instances × strategies × depths, sampling each cell
    Run {
        /// Experiment config JSON; flags below override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        /// Instance or lattice spec file (repeatable)
        #[arg(long = "instance")]
        instances: Vec<PathBuf>,
        /// Strategy to sweep (repeatable)
        #[arg(long = "strategy", value_enum)]
        strategies: Vec<Strategy>,
        /// Circuit depth p to sweep (repeatable)
        #[arg(long = "depth")]
        depths: Vec<usize>,
        /// Also sample the uniform random baseline per instance
        #[arg(long)]
        random_baseline: bool,
        /// Evaluation budget for full-opt
        #[arg(long)]
        budget_full: Option<usize>,
        /// Evaluation budget for linear-ramp
        #[arg(long)]
        budget_ramp: Option<usize>,
        /// Evaluation budget for gamma-only
        #[arg(long)]
        budget_gamma_only: Option<usize>,
    },
    /// Optimize on a source instance, then sample a target with the carried
    /// parameters; reports both success rates side by side
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Optimizing strategy to run on the source
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Circuit depth p (repeatable)
        #[arg(long = "depth")]
        depths: Vec<usize>,
        #[arg(long)]
        budget_full: Option<usize>,
        #[arg(long)]
        budget_ramp: Option<usize>,
        #[arg(long)]
        budget_gamma_only: Option<usize>,
    },
}

fn apply_globals(cfg: &mut ExperimentConfig, globals: &Globals) {
    if let Some(seed) = globals.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = globals.shots {
        cfg.shots = shots;
    }
    if let Some(out_dir) = &globals.out_dir {
        cfg.out_dir = out_dir.clone();
    }
    if let Some(max_qubits) = globals.max_qubits {
        cfg.max_qubits = max_qubits;
    }
    if let Some(workers) = globals.workers {
        cfg.workers = Some(workers);
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            lattice,
            random_n,
            scale,
            output,
        } => commands::cmd_generate(
            lattice.as_deref(),
            random_n,
            scale,
            cli.globals.seed.unwrap_or(1),
            &output,
        ),
        Command::SolveExact { instance, output } => commands::cmd_solve_exact(
            &instance,
            output.as_ref(),
            cli.globals
                .max_qubits
                .unwrap_or(crystal_qaoa::DEFAULT_EXHAUSTIVE_LIMIT),
        ),
        Command::Run {
            config,
            instances,
            strategies,
            depths,
            random_baseline,
            budget_full,
            budget_ramp,
            budget_gamma_only,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_json_file(&path)?,
                None => ExperimentConfig::default(),
            };
            if !instances.is_empty() {
                cfg.instances = instances;
            }
            if !strategies.is_empty() {
                cfg.strategies = strategies;
            }
            if !depths.is_empty() {
                cfg.depths = depths;
            }
            if random_baseline {
                cfg.random_baseline = true;
            }
            if let Some(b) = budget_full {
                cfg.budget_full = b;
            }
            if let Some(b) = budget_ramp {
                cfg.budget_ramp = b;
            }
            if let Some(b) = budget_gamma_only {
                cfg.budget_gamma_only = b;
            }
            apply_globals(&mut cfg, &cli.globals);
            experiment::cmd_run(&cfg)
        }
        Command::Transfer {
            source,
            target,
            strategy,
            depths,
            budget_full,
            budget_ramp,
            budget_gamma_only,
        } => {
            let mut cfg = ExperimentConfig::default();
            if let Some(b) = budget_full {
                cfg.budget_full = b;
            }
            if let Some(b) = budget_ramp {
                cfg.budget_ramp = b;
            }
            if let Some(b) = budget_gamma_only {
                cfg.budget_gamma_only = b;
            }
            apply_globals(&mut cfg, &cli.globals);
            transfer::cmd_transfer(&transfer::TransferJob {
                source,
                target,
                strategy,
                depths,
                cfg,
            })
        }
    }
}
