mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::exit_code;

/// Calibrate, train and evaluate two-qubit gate pulses on a pair of
/// coupled transmons.
#[derive(Parser, Debug)]
#[command(name = "pulseforge", version, about)]
struct Cli {
    /// TOML or JSON file with one table per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the command's table.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; PULSEFORGE_OUT takes precedence.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Continue training from the latest checkpoint in the output directory.
    #[arg(long, global = true)]
    resume: bool,
    /// Exit with code 4 when a configured threshold is missed.
    #[arg(long, global = true)]
    strict: bool,
    /// Single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads for parallel sweeps and sampling.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Calibrate one baseline pulse (DRAG, echoed or direct cross resonance).
    Calibrate,
    /// Best-of-k calibrated fidelity over a list of gate durations.
    Sweep,
    /// Train an agent on a gate environment or the toy problem.
    Train,
    /// Evaluate a pulse or a trained agent.
    Eval,
    /// Fine-tune a checkpoint on a shifted drift distribution.
    Finetune,
    /// List the environment presets and calibration defaults.
    Presets,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    match std::env::var_os("PULSEFORGE_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.unwrap_or_else(|| PathBuf::from("out")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = if cli.deterministic { 1 } else { cli.workers.unwrap_or(0) };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    let ctx = Ctx {
        config_path: cli.config,
        seed: cli.seed,
        out_dir: out_dir(cli.out_dir),
        resume: cli.resume,
        strict: cli.strict,
    };
    match cli.command {
        Command::Calibrate => commands::calibrate::run(&ctx),
        Command::Sweep => commands::sweep::run(&ctx),
        Command::Train => commands::train::run(&ctx),
        Command::Eval => commands::eval::run(&ctx),
        Command::Finetune => commands::finetune::run(&ctx),
        Command::Presets => commands::presets(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::from(config::EXIT_OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
