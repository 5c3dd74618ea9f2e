mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

/// Error bounds for count-min sketches with conservative updates.
#[derive(Debug, Parser)]
#[command(name = "cu-bound", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite-horizon bounds l_g(T) and U_g(T).
    Bounds(BoundsArgs),
    /// Limits l_g(∞) and U_g(∞) by power iteration.
    Asymptotic(AsymptoticArgs),
    /// Closed forms for d = m - 1.
    ClosedForm(ClosedFormArgs),
    /// Monte-Carlo estimate of E[e*(T)/T] under uniform counter selection.
    Simulate(SimulateArgs),
    /// Exact E[e*(T)] by enumerating every selection sequence.
    Oracle(OracleArgs),
    /// Bounds for m = 50, d = 4, T = 250 and g = 1..gmax.
    Table1(Table1Args),
    /// Run the cross-check suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundVariant {
    Lb,
    Ub,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Standard,
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimVariant {
    Cu,
    Lb,
    Ub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub g: usize,
    #[arg(long)]
    pub t: u64,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: BoundVariant,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the kernel as JSON; with `--variant both`, `.lb`/`.ub` is
    /// inserted before the extension.
    #[arg(long)]
    pub dump_kernel: Option<PathBuf>,
    /// Occupancy vectors averaged: π(0..T-1) or π(1..T).
    #[arg(long, value_enum, default_value = "standard")]
    pub window: WindowArg,
}

#[derive(Debug, Args)]
pub struct AsymptoticArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub g: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: BoundVariant,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct ClosedFormArgs {
    #[arg(long)]
    pub m: usize,
    /// Report the gap tail for this g only (default 1..=10).
    #[arg(long)]
    pub g: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub t: u64,
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "cu")]
    pub variant: SimVariant,
    /// Gap cap g, required for lb and ub.
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Include per-run errors in JSON output (always present in CSV).
    #[arg(long)]
    pub keep_runs: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub t: u64,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=5))]
    pub gmax: u32,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: LevelArg,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cu_bound::Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use cu_bound::Error as E;
        match self {
            CliError::Core(E::NonConvergence { .. } | E::Internal(_)) => 2,
            CliError::Verify(_) => 3,
            _ => 1,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CU_BOUND_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "CU_BOUND_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let started = Instant::now();
    let outcome = configure_threads().and_then(|()| commands::run(cli.command, started));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
