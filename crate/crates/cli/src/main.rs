#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser)]
#[command(name = "mixfeed", version, about = "Mixed-feedback oscillator analysis, LMI design and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency-domain analysis.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
    /// Synthesize a dominant state-feedback gain and write its certificate.
    Design {
        kind: DesignKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the closed loop (optionally with a designed gain) and classify the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a certificate from scratch.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Dominance map over the (k, β) grid.
    Map {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DesignKind {
    Nominal,
    Parametric,
    Robust,
    Passive,
}

fn set_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("MIXFEED_THREADS") else {
        return Ok(());
    };
    let n = v
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("MIXFEED_THREADS must be a positive integer (got {v:?})")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("cannot size the thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    set_threads()?;
    match cli.command {
        Command::Analyze {
            what: Analyze::Map { config, out },
        } => commands::analyze_map(&config, &out),
        Command::Design { kind, config, out } => commands::design(kind, &config, &out),
        Command::Simulate { config, cert, out } => commands::simulate(&config, cert.as_deref(), &out),
        Command::Verify { cert, config } => commands::verify(&cert, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
