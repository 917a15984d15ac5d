//! Command-line front end: complex CSV ingestion, selection and benchmark
//! orchestration, and result emission.

pub mod commands;
pub mod report;
pub mod table;

use clap::{Parser, Subcommand};

pub use commands::{cmd_doa_bench, cmd_regression_bench, cmd_select};

#[derive(Debug, Parser)]
#[command(name = "ctrex", version, about = "FDR-controlled variable selection for complex-valued data")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CTREX_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select variables from a design and response given as complex CSV tables.
    Select(commands::SelectArgs),
    /// Monte-Carlo benchmark on synthetic complex sparse regression.
    RegressionBench(commands::RegressionBenchArgs),
    /// Monte-Carlo benchmark on single-snapshot ULA direction finding.
    DoaBench(commands::DoaBenchArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input files or parameters.
    #[error("{0}")]
    Input(String),
    /// The numerics failed on valid input.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl From<ctrex_core::Error> for CliError {
    fn from(e: ctrex_core::Error) -> Self {
        use ctrex_core::Error as E;
        match e {
            E::DimensionMismatch(_)
            | E::ConstantColumn { .. }
            | E::InvalidConfig(_)
            | E::InvalidGrid(_)
            | E::OffGridSource(_) => CliError::Input(e.to_string()),
            E::NotPositiveDefinite { .. } | E::SingularActiveSet { .. } | E::PathSaturated => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<table::TableError> for CliError {
    fn from(e: table::TableError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        Some(0) => Err(CliError::Input("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Input(format!("cannot start {n} worker threads: {e}"))),
        None => Ok(f()),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = with_threads(cli.threads, || match &cli.command {
        Command::Select(args) => cmd_select(args).map(|r| {
            eprintln!(
                "selected {} of {} variables (v* = {}, T* = {}, FDP estimate {:.4})",
                r.selected.len(),
                r.phi.len(),
                r.v_star,
                r.t_star,
                r.fdp_hat
            )
        }),
        Command::RegressionBench(args) => cmd_regression_bench(args).map(|r| {
            eprintln!("wrote {} benchmark rows", r.rows.len());
        }),
        Command::DoaBench(args) => cmd_doa_bench(args).map(|r| {
            eprintln!("wrote {} benchmark rows", r.rows.len());
        }),
    })
    .and_then(|r| r);
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
