mod commands;
mod config;
mod run_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Learned relational value functions for classical planning.
#[derive(Debug, Parser)]
#[command(name = "relvalue", version)]
pub struct Cli {
    /// Worker threads for instance-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal plan by A* with h_max.
    Solve {
        /// Domain file, or a family tag such as `blocks-clear`.
        domain: String,
        instance: PathBuf,
        /// Start from the atoms listed in this file instead of the initial state.
        #[arg(long)]
        from_state: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        max_expansions: usize,
    },
    /// Write generated instances as PDDL files.
    GenInstances {
        #[arg(long)]
        domain: String,
        /// Size range `a-b`.
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        count: usize,
        /// Keep only instances whose optimal cost lies in `a-b`.
        #[arg(long)]
        cost: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label random walks on a directory of instances.
    GenData {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = relvalue::data::DEFAULT_WALK_LENGTH)]
        walk_length: usize,
        #[arg(long, default_value_t = relvalue::data::DEFAULT_CAP)]
        cap: usize,
        /// Fraction of labels to recompute from scratch after labeling.
        #[arg(long, default_value_t = 0.0)]
        verify: f64,
    },
    /// Train a value function and write the selected checkpoint.
    Train {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "max")]
        agg: String,
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// Message-passing rounds.
        #[arg(long, default_value_t = 10)]
        l: usize,
        /// Number of random initializations.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 16)]
        batch_size: usize,
        #[arg(long, default_value_t = 2e-4)]
        lr: f64,
        /// L1 coefficient (default: 1e-4 for sum, 0 for max).
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long)]
        time_budget_secs: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Greedy-policy coverage on a directory of instances.
    Eval {
        #[arg(long, required_unless_present = "oracle")]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        instances: PathBuf,
        /// Use the closed-form oracle of this family instead of a checkpoint.
        #[arg(long)]
        oracle: Option<String>,
        /// Family of the instances (default: recorded in the checkpoint).
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, default_value_t = relvalue::policy::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Seed of the evaluation-time initial embeddings.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print one line per instance as well.
        #[arg(long)]
        verbose: bool,
    },
    /// Linear probe from readout features to hand-crafted features.
    Probe {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        domain: String,
        /// Use the summed feature set.
        #[arg(long)]
        sigma: bool,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the closed-form oracle with optimal search.
    OracleCheck {
        domain: String,
        instance: PathBuf,
        /// Check every reachable state instead of the initial state and an optimal plan.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 100_000)]
        limit: usize,
    },
    /// Full experiment from a `key = value` config file.
    Repro { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error\tkind=config\tmessage={e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            // One tab-separated record on stderr.
            let message = e.to_string().replace(['\n', '\t'], " ");
            eprintln!("error\tkind={}\tmessage={message}", e.kind());
            ExitCode::from(2)
        }
    }
}
