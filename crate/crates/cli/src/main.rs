//! Command-line front end. Arm numbers on the command line and in printed
//! output are 1-based.

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use source::InstanceArgs;

#[derive(Parser, Debug)]
#[command(
    name = "blockrank",
    version,
    about = "Best-arm identification under correlated random-utility choice models"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Seed for every random stream; overrides a plan's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for experiment runs (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Monte Carlo samples per estimate.
    #[arg(long, global = true, default_value_t = blockrank::choice::DEFAULT_MC_SAMPLES)]
    samples: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Analytic,
    Mc,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Winner probabilities of one subset.
    Winprob {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Comma-separated 1-based arms, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Mc)]
        mode: Mode,
    },
    /// Sector and Monte Carlo probabilities of the planar construction.
    Impossibility {
        /// Even number of arms, at least 4.
        #[arg(long)]
        k: usize,
        /// Score bonus of the first arm in the Monte Carlo run.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Run an experiment plan (TOML).
    Run { config: PathBuf },
    /// List instance generators, or print one instance as JSON.
    Catalog {
        /// Generator to instantiate.
        name: Option<String>,
        #[command(flatten)]
        params: source::CatalogParams,
    },
    /// Run triple screening alone and print its report.
    PreprocessCheck {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        delta: f64,
        /// Multiplier on ln(4 n^3 / delta) in the plays per triple.
        #[arg(long)]
        preprocess_const: Option<f64>,
    },
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum CliError {
    /// An experiment ran but some cell failed (exit 1).
    Failure(String),
    /// Bad flags, config or input (exit 2).
    Usage(String),
    /// The request is well formed but not supported (exit 3).
    Capability(String),
}

impl From<blockrank::Error> for CliError {
    fn from(e: blockrank::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match cli.command {
        Command::Winprob {
            instance,
            subset,
            mode,
        } => commands::winprob(&cli.global, &instance, &subset, mode),
        Command::Impossibility { k, epsilon } => commands::impossibility(&cli.global, k, epsilon),
        Command::Run { config } => commands::run(&cli.global, &config),
        Command::Catalog { name, params } => {
            commands::catalog(&cli.global, name.as_deref(), &params)
        }
        Command::PreprocessCheck {
            instance,
            delta,
            preprocess_const,
        } => commands::preprocess_check(&cli.global, &instance, delta, preprocess_const),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Capability(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
