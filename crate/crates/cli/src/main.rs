//! `coalisure`: sample, build cores, compress, certify and validate.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{ConfigError, Overrides, Settings};

#[derive(Parser)]
#[command(name = "coalisure", version, about = "Stability certificates for coalitional games with privately sampled uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Comma-separated certificate methods (thm1,thm2,thm3,thm4,corollary,thm5).
    #[arg(long, global = true, value_name = "LIST")]
    method: Option<String>,

    /// Coverage trials.
    #[arg(long, global = true, value_name = "T")]
    trials: Option<usize>,

    /// Fresh samples per coverage trial.
    #[arg(long, global = true, value_name = "N")]
    fresh: Option<usize>,

    /// Sample file to read instead of `<out>/samples.csv`.
    #[arg(long, global = true, value_name = "PATH")]
    samples: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Draw the private multi-samples.
    Generate,
    /// Build the scenario core from the samples.
    Core,
    /// Run the distributed compression and check it.
    Compress,
    /// Compute the requested certificates.
    Certify,
    /// Solve the slack-minimizing program.
    Zeta,
    /// Run coverage experiments for the requested methods.
    Validate,
    /// generate, core, compress, certify, zeta and validate in sequence.
    RunAll,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("COALISURE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("COALISURE_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let path = cli
        .config
        .ok_or_else(|| ConfigError("--config is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        methods: cli.method,
        trials: cli.trials,
        fresh: cli.fresh,
        samples: cli.samples,
    };
    let s = Settings::load(&path, &overrides)?;
    match cli.command {
        Command::Generate => commands::generate(&s).map(drop),
        Command::Core => commands::core(&s, &commands::load_samples(&s)?),
        Command::Compress => commands::compress(&s, &commands::load_samples(&s)?),
        Command::Certify => commands::certify(&s, None),
        Command::Zeta => commands::zeta(&s, &commands::load_samples(&s)?),
        Command::Validate => commands::validate(&s).map(drop),
        Command::RunAll => commands::run_all(&s),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
