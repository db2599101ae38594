//! `mlec`: run multi-level coding experiments from TOML configs.
//!
//! Exit codes: 0 success, 1 domain error (a report with an `error` field is
//! still written), 2 config error. `MLEC_THREADS` caps worker parallelism.

mod config;
mod report;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ExperimentConfig};
use runner::RunError;

#[derive(Parser)]
#[command(name = "mlec", version, about = "Multi-level coding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a codebook and report its matrix, rank, and decodability.
    Design(RunArgs),
    /// Exhaustively classify a code space (valid/correctable/ambiguous).
    Census(RunArgs),
    /// Monte-Carlo simulation of an encode/noise/detect/repair chain.
    Simulate(RunArgs),
    /// Minimise correction energy across two or more levels.
    Optimize(RunArgs),
    /// Path-integral information measures for continuous signals.
    Continuous(RunArgs),
    /// Decode with a different codebook than the encoder's.
    Mismatch(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report files (default: config's out_dir, then ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's trial count (simulate only).
    #[arg(long)]
    trials: Option<usize>,
}

impl Command {
    fn kind(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Census(_) => "census",
            Command::Simulate(_) => "simulate",
            Command::Optimize(_) => "optimize",
            Command::Continuous(_) => "continuous",
            Command::Mismatch(_) => "mismatch",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Design(args)
            | Command::Census(args)
            | Command::Simulate(args)
            | Command::Optimize(args)
            | Command::Continuous(args)
            | Command::Mismatch(args) => args,
        }
    }
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("MLEC_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            if threads >= 1 {
                // Ignore failure: the global pool may already exist.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn load_and_resolve(kind: &str, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if config.kind != kind {
        return Err(ConfigError::invalid(
            "kind",
            format!(
                "config declares kind `{}` but the `{kind}` subcommand was invoked",
                config.kind
            ),
        ));
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(ConfigError::invalid("trials", "must be at least 1"));
        }
        match config.simulate.as_mut() {
            Some(simulate) => simulate.trials = trials,
            None => {
                return Err(ConfigError::invalid(
                    "trials",
                    "--trials applies only to simulate configs",
                ))
            }
        }
    }
    // Re-validate after overrides (seed may have been supplied only now).
    config.validate()?;
    Ok(config)
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".to_string())
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let args = cli.command.args();

    let config = match load_and_resolve(kind, args) {
        Ok(config) => config,
        Err(error) => {
            eprintln!("error: {error}");
            return ExitCode::from(2);
        }
    };

    let out_dir = args
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = stem_of(&args.config);

    match runner::run(&config, &out_dir, &stem) {
        Ok(paths) => {
            for path in paths {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(error)) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
        Err(RunError::Domain { code, message }) => {
            eprintln!("error [{code}]: {message}");
            if std::fs::create_dir_all(&out_dir).is_ok() {
                match runner::write_error_report(&config, &out_dir, &stem, &code, &message) {
                    Ok(path) => println!("wrote {}", path.display()),
                    Err(io) => eprintln!("error: cannot write error report: {io}"),
                }
            }
            ExitCode::from(1)
        }
        Err(RunError::Io(error)) => {
            eprintln!("error: {error}");
            ExitCode::from(1)
        }
    }
}
