mod config;
mod run;

use clap::{Parser, Subcommand, ValueEnum};
use config::{ConfigError, RunConfig};
use perclab_core::PercError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "perclab", version, about = "Bond percolation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo estimate of one quantity, written as CSV or JSON.
    Estimate {
        quantity: Quantity,
        /// JSON file with the same keys as the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: RunConfig,
    },
    /// Exact checks.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Run the experiments in a JSON spec file (an object or an array).
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Directory for CSV outputs of experiments without an `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Golden suite of exact enumeration values.
    Oracle {
        /// Golden file; default: the one built into the binary.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Tail,
    TwoArm,
    Ghost,
    Kappa,
    OneArm,
    Pc,
    Halfspace,
    Martingale,
    Modular,
}

/// Verification failure (exit code 2).
#[derive(Debug)]
pub struct VerifyFailed(pub String);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerifyFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 1;
    }
    if err.downcast_ref::<VerifyFailed>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<PercError>() {
        return match e {
            PercError::Config(_) | PercError::Domain(_) | PercError::InvalidVertex(_) | PercError::Path(_) => 1,
            PercError::Json(_) => 1,
            PercError::Verification(_) | PercError::Coupling(_) => 2,
            PercError::Budget(_) | PercError::InsufficientData(_) | PercError::Io(_) | PercError::Csv(_) => 3,
        };
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Estimate { quantity, config, flags } => run::estimate(quantity, config.as_deref(), flags),
        Command::Verify { what: Verify::Oracle { golden, workers } } => run::verify_oracle(golden.as_deref(), workers),
        Command::Experiment { spec, out, workers } => run::experiment(&spec, out.as_deref(), workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perclab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
