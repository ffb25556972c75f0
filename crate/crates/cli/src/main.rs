//! `qemerge`: batch computations and reproducible demos.
//!
//! Exit codes: 2 for parse errors, 3 for numerical validation failures,
//! 4 when a resource cap is exceeded.

mod commands;
mod config;
mod demos;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::NamedState;
use crate::output::Format;

/// Malformed or unreadable input.
#[derive(Debug)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error: {}", self.0)
    }
}

impl std::error::Error for ParseError {}

/// Input parsed but failed a numerical check.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(msg) => write!(f, "validation failed: {msg}"),
        }
    }
}

impl std::error::Error for Failure {}

#[derive(Debug, Args)]
pub struct Output {
    /// Write here instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

impl Output {
    pub fn path(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qemerge",
    version,
    about = "Quantum subsystems as probabilistic observables of classical ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the generator relations of a basis.
    ValidateBasis {
        /// Built-in Pauli-string basis of this dimension.
        #[arg(long, conflicts_with = "config")]
        dim: Option<usize>,
        /// JSON with either "M" or explicit "generators".
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Build a classical product ensemble and its probabilities.
    EnsembleBuild {
        #[arg(long)]
        config: PathBuf,
        /// Independence threshold for tr(A - B)^2.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Two sequential measurements: reduction, conditional probabilities, correlations.
    Measure {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Integrate the Bloch-vector evolution.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Record every n-th step.
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Debug, Subcommand)]
enum Demo {
    /// Bell slack over the angle grid, as CSV.
    Bell {
        /// Angles are k·π/divisions for k = 0..=divisions.
        #[arg(long, default_value_t = 36)]
        divisions: usize,
        #[arg(long, value_enum, default_value = "singlet")]
        state: NamedState,
        #[command(flatten)]
        out: Output,
    },
    /// Value-assignment contradiction for the eight-state bit chains.
    Ks {
        #[command(flatten)]
        out: Output,
    },
    /// The entangled two-qubit state, its correlation grid and Bell slack.
    Singlet {
        #[arg(long, default_value_t = 36)]
        divisions: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Anticorrelation chains at M = 4 and the eight-state contradiction trace.
    Chains {
        #[command(flatten)]
        out: Output,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("QEMERGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        ParseError(format!(
            "QEMERGE_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    if threads == 0 {
        anyhow::bail!(ParseError("QEMERGE_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::ValidateBasis { dim, config, out } => commands::validate_basis(dim, config, &out),
        Command::EnsembleBuild {
            config,
            epsilon,
            format,
            out,
        } => commands::ensemble_build(config, epsilon, format, &out),
        Command::Measure { config, out } => commands::measure(config, &out),
        Command::Evolve {
            config,
            dt,
            t_final,
            stride,
            format,
            out,
        } => commands::evolve(
            config,
            commands::EvolveOverrides {
                dt,
                t_final,
                stride,
            },
            format,
            &out,
        ),
        Command::Demo(Demo::Bell {
            divisions,
            state,
            out,
        }) => demos::bell(divisions, state, &out),
        Command::Demo(Demo::Ks { out }) => demos::ks(&out),
        Command::Demo(Demo::Singlet { divisions, out }) => demos::singlet(divisions, &out),
        Command::Demo(Demo::Chains { out }) => demos::chains_demo(&out),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ParseError>().is_some() {
        2
    } else if let Some(e) = err.downcast_ref::<qemerge::Error>() {
        if e.is_cap() {
            4
        } else {
            3
        }
    } else if err.downcast_ref::<Failure>().is_some() {
        3
    } else {
        1
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
