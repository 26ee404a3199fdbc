//! `netdyn` — event-driven analysis of inhibitory pacemaker networks.
//!
//! Subcommands: `constants`, `simulate`, `cycles`, `classify`, `atoms`.
//! All outputs are plain-text files under `--out <prefix>`, fully
//! determined by the config and seed. `NETDYN_THREADS` caps the worker
//! count and only affects speed, never results.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{run, Command, RunError};
use config::parse_config;

#[derive(Parser)]
#[command(name = "netdyn", version, about = "Inhibitory pacemaker network dynamics analyzer")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Emit the derived system constants.
    Constants(RunArgs),
    /// Record one orbit of the post-spike return map.
    Simulate(RunArgs),
    /// Discover and refine limit cycles from seeded orbit samples.
    Cycles(RunArgs),
    /// Classify section samples as stable or chaotic and estimate measures.
    Classify(RunArgs),
    /// Refine the section into itinerary atoms and extract cycle chains.
    Atoms(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix.
    #[arg(long, default_value = "netdyn")]
    out: String,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        CliCommand::Constants(a) => (Command::Constants, a),
        CliCommand::Simulate(a) => (Command::Simulate, a),
        CliCommand::Cycles(a) => (Command::Cycles, a),
        CliCommand::Classify(a) => (Command::Classify, a),
        CliCommand::Atoms(a) => (Command::Atoms, a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("netdyn: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("netdyn: config error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }

    let outputs = match run(command, &cfg) {
        Ok(o) => o,
        Err(RunError::Usage(msg)) => {
            eprintln!("netdyn: config error: {msg}");
            return ExitCode::from(1);
        }
        Err(RunError::Numerics(e)) => {
            eprintln!("netdyn: numerical failure: {e}");
            return ExitCode::from(2);
        }
    };

    for (suffix, content) in &outputs {
        let path = format!("{}.{suffix}", args.out);
        if let Err(e) = std::fs::write(&path, content) {
            eprintln!("netdyn: cannot write {path}: {e}");
            return ExitCode::from(2);
        }
        println!("wrote {path}");
    }
    ExitCode::SUCCESS
}

/// Honor `NETDYN_THREADS` as a worker-count cap. Results never depend on
/// it; sample streams are indexed and reductions run in sample order.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("NETDYN_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}
