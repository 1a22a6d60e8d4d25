//! `ghzsense`: command-line front end for GHZ-network phase estimation analyses.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ghz_metrology::Error as CoreError;

use commands::SingularBound;
use config::{Command, ConfigError, Destination, Flags};

#[derive(Parser)]
#[command(name = "ghzsense", version, about = "Fisher information and Cramér-Rao bounds for GHZ sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Output state amplitudes after the phase encoding.
    State(Flags),
    /// Quantum Fisher information matrix.
    Qfim(Flags),
    /// Classical Fisher information matrix of the σx measurement.
    Cfim(Flags),
    /// Reparametrization matrices and the Fisher matrix in the new chart.
    Transform(Flags),
    /// Weak and exact Cramér-Rao bounds for a linear combination of parameters.
    Bounds(Flags),
    /// Quantum and classical bounds on the average phase over a grid of (N, d).
    Sweep(Flags),
    /// Monte Carlo maximum-likelihood experiment against the Cramér-Rao bound.
    Simulate(Flags),
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::State(f) => (Command::State, f),
            Sub::Qfim(f) => (Command::Qfim, f),
            Sub::Cfim(f) => (Command::Cfim, f),
            Sub::Transform(f) => (Command::Transform, f),
            Sub::Bounds(f) => (Command::Bounds, f),
            Sub::Sweep(f) => (Command::Sweep, f),
            Sub::Simulate(f) => (Command::Simulate, f),
        }
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_SINGULAR: u8 = 3;
const EXIT_NONCONVERGENCE: u8 = 4;

fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_INVALID;
        }
        if cause.is::<SingularBound>() {
            return EXIT_SINGULAR;
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::SingularMatrix { .. } | CoreError::NotPositiveDefinite(_) | CoreError::NullDirection { .. } => {
                    EXIT_SINGULAR
                }
                CoreError::NonConvergence { .. } => EXIT_NONCONVERGENCE,
                CoreError::Json(_) => EXIT_FAILURE,
                _ => EXIT_INVALID,
            };
        }
    }
    EXIT_FAILURE
}

fn execute(command: Command, flags: &Flags) -> Result<()> {
    let config = config::resolve(command, flags)?;
    let artifacts = commands::run(&config)?;
    match &config.destination {
        Destination::Stdout => {
            eprint!("{}", artifacts.summary);
            let mut out = std::io::stdout().lock();
            out.write_all(artifacts.machine.as_bytes())?;
            out.flush()?;
        }
        Destination::File(path) => {
            commands::ensure_parent_dir(path)?;
            std::fs::write(path, &artifacts.machine).with_context(|| format!("cannot write {}", path.display()))?;
            print!("{}", artifacts.summary);
            println!("wrote {}", path.display());
            for (suffix, contents) in &artifacts.extra {
                let extra = commands::companion_path(path, suffix);
                std::fs::write(&extra, contents).with_context(|| format!("cannot write {}", extra.display()))?;
                println!("wrote {}", extra.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    match execute(command, &flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_status(&err))
        }
    }
}
