//! `sparsegpt`: prune weight matrices, cross-check the pruners, sweep flop
//! counts and query the cost model.
//!
//! Exit codes: 0 success, 1 usage or input-file error, 2 numerical or
//! configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sparsegpt_core::bench::MetricSet;
use sparsegpt_core::{ExecMode, Lambda, MatMulBackend};

#[derive(Debug, Parser)]
#[command(
    name = "sparsegpt",
    version,
    about = "Lazy-blocked SparseGPT pruning with exact flop accounting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prune a square weight matrix against calibration inputs.
    Prune(PruneArgs),
    /// Compare the lazy pruner with the eager reference (and the exact oracle) on a seeded instance.
    Verify(VerifyArgs),
    /// Sweep (d, B, backend) cells and fit log-log slopes.
    Bench(BenchArgs),
    /// Evaluate the asymptotic cost model.
    Costmodel(CostmodelArgs),
}

#[derive(Debug, clap::Args)]
struct PruneArgs {
    /// Weights, d×d (`.csv` or FMAT1).
    #[arg(long)]
    weights: PathBuf,
    /// Calibration inputs, d×N (`.csv` or FMAT1).
    #[arg(long)]
    calib: PathBuf,
    /// Fraction of each column to prune, in [0, 1].
    #[arg(long)]
    sparsity: f64,
    /// Lazy block width B.
    #[arg(long)]
    block: usize,
    /// Mask block width B_s; must divide B.
    #[arg(long)]
    mask_block: usize,
    /// Diagonal regularizer: a positive number or `auto`.
    #[arg(long, default_value = "auto")]
    lambda: Lambda,
    /// Outer-update backend: classical, strassen or strassen:<threshold>.
    #[arg(long, default_value = "classical")]
    backend: MatMulBackend,
    #[arg(long, value_enum, default_value_t = Mode::Deterministic)]
    mode: Mode,
    /// Pruned weights (`.csv` or FMAT1).
    #[arg(long)]
    out: PathBuf,
    /// Keep-mask as a 0/1 matrix.
    #[arg(long)]
    mask_out: Option<PathBuf>,
    /// Run statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Deterministic,
    Performance,
}

impl From<Mode> for ExecMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Deterministic => ExecMode::Deterministic,
            Mode::Performance => ExecMode::Performance,
        }
    }
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    sparsity: f64,
    #[arg(long)]
    block: usize,
    #[arg(long)]
    mask_block: usize,
    /// Also compare against the exact rational pruner (d ≤ 16).
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// Comma-separated dimensions, strictly increasing, each ≥ 8.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Comma-separated block exponents a; B = d^a snapped to a divisor of d.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    a: Vec<f64>,
    /// Comma-separated backends.
    #[arg(long, value_delimiter = ',', default_value = "classical")]
    backend: Vec<MatMulBackend>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// flops, walltime or both.
    #[arg(long, default_value = "flops")]
    metric: MetricSet,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Records as CSV, or records plus slope fits as JSON when the path ends in `.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct CostmodelArgs {
    /// Anchor table, CSV with header `a,omega`.
    #[arg(long)]
    omega_table: Option<PathBuf>,
    /// Grid step for the block-exponent search, in (0, 0.01].
    #[arg(long, default_value_t = sparsegpt_core::costmodel::DEFAULT_GRID_STEP)]
    grid: f64,
    /// Report the cost exponents at this a instead of optimizing.
    #[arg(long)]
    a: Option<f64>,
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
    let result = match cli.command {
        Command::Prune(args) => commands::prune(args),
        Command::Verify(args) => commands::verify(args),
        Command::Bench(args) => commands::bench(args),
        Command::Costmodel(args) => commands::costmodel(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
