//! Command-line driver for the random-walk laboratory.
//!
//! Every experiment subcommand reads a TOML config, runs the computation,
//! prints a summary, and (with an output directory) writes artifacts plus
//! a `record.json` that `lamplab replay` can later verify bit-for-bit.
//!
//! Exit codes: `0` success, `2` configuration error, `3` runtime error,
//! `4` acceptance-suite failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lamplab::acceptance;
use lamplab::experiment::{self, ExperimentError, ExperimentKind, ExperimentRecord};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lamplab",
    version,
    about = "Random-walk laboratory: cover times, uncovered-set markings, \
             excursions, and lamplighter chains",
    arg_required_else_help = true
)]
struct Cli {
    /// Run the acceptance suite and exit (`0` if every check passes,
    /// `4` otherwise).
    #[arg(long)]
    check: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph; write its edge list and metadata.
    Gen(RunArgs),
    /// Estimate the expected cover time by Monte Carlo.
    Cover(RunArgs),
    /// Measure late-set sizes and zero-count statistics over a time grid.
    Late(RunArgs),
    /// Test range markings against uniform ones: power, moment bounds,
    /// false-rejection rate.
    Distinguish(RunArgs),
    /// Run the excursion decomposition: hitting prediction, occupation,
    /// renewal counts, optional rate partition.
    Excursion(RunArgs),
    /// Probe the lamplighter lamp-marginal cutoff.
    Lamplighter(RunArgs),
    /// Compute the exact spectral summary (mixing, Green's function,
    /// hitting times).
    Oracle(RunArgs),
    /// Re-run a recorded experiment and verify every value bit-for-bit.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's worker thread count (`0` = default pool).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    /// A `record.json` written by a previous run.
    record: PathBuf,
    /// Rejected: records are immutable replay inputs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rejected: records are immutable replay inputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Rejected: records are immutable replay inputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rejected: records are immutable replay inputs.
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_for(error: &ExperimentError) -> u8 {
    match error {
        ExperimentError::ConfigInvalid(_) | ExperimentError::Json(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn fail(error: &ExperimentError) -> ExitCode {
    eprintln!("error: {error}");
    ExitCode::from(exit_for(error))
}

fn config_fail(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_CONFIG)
}

fn print_record(record: &ExperimentRecord) {
    println!("experiment: {} (seed {})", record.experiment, record.seed);
    for line in record.summary_lines() {
        println!("  {line}");
    }
    for artifact in &record.artifacts {
        println!("  wrote {artifact}");
    }
    println!("  {} ms", record.wall_ms);
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return config_fail(&format!("cannot read {}: {e}", args.config.display())),
    };
    let mut config = match experiment::parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if config.experiment != kind {
        return config_fail(&format!(
            "config declares experiment `{}` but the `{}` subcommand was invoked",
            config.experiment.name(),
            kind.name()
        ));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }
    match experiment::run(&config) {
        Ok(record) => {
            print_record(&record);
            if let Some(dir) = &config.out {
                println!("record: {}", dir.join("record.json").display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn run_replay(args: &ReplayArgs) -> ExitCode {
    if args.config.is_some() || args.seed.is_some() || args.out.is_some() || args.threads.is_some()
    {
        return config_fail(
            "replay takes no overrides: records are immutable replay inputs",
        );
    }
    match experiment::replay_path(&args.record) {
        Ok(record) => {
            let verified = record.values.len() + usize::from(record.t_cov_ref.is_some());
            println!(
                "replay ok: {} ({} values bit-exact)",
                args.record.display(),
                verified
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn run_check() -> ExitCode {
    let outcomes = acceptance::run_all();
    print!("{}", acceptance::report(&outcomes));
    if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.check {
        if cli.command.is_some() {
            return config_fail("--check runs the acceptance suite and takes no subcommand");
        }
        return run_check();
    }
    match &cli.command {
        Some(Command::Gen(args)) => run_experiment(ExperimentKind::Gen, args),
        Some(Command::Cover(args)) => run_experiment(ExperimentKind::Cover, args),
        Some(Command::Late(args)) => run_experiment(ExperimentKind::Late, args),
        Some(Command::Distinguish(args)) => run_experiment(ExperimentKind::Distinguish, args),
        Some(Command::Excursion(args)) => run_experiment(ExperimentKind::Excursion, args),
        Some(Command::Lamplighter(args)) => run_experiment(ExperimentKind::Lamplighter, args),
        Some(Command::Oracle(args)) => run_experiment(ExperimentKind::Oracle, args),
        Some(Command::Replay(args)) => run_replay(args),
        None => config_fail("nothing to do: pass a subcommand or --check"),
    }
}
