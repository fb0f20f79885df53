//! `photomesh` command-line driver.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 malformed input or
//! arguments, 3 input matrix not unitary, 4 numerical failure.

mod commands;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotUnitary(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Input(_) => 2,
            CliError::NotUnitary(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "photomesh", version, about = "Program photonic MZI meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose a unitary into a phase table
    Decompose(DecomposeArgs),
    /// Evaluate a phase table back to its unitary
    Reconstruct(IoArgs),
    /// Move the residual phases of a clements-smzi table onto edge waveguides
    Relocate(IoArgs),
    /// Write a Haar-random unitary
    Haar(HaarArgs),
    /// Program an alternating-layer circuit toward a target by optimization
    Optimize(OptimizeArgs),
    /// Imbalance-robustness sweep over schemes and sigma
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    #[value(name = "reck-smzi")]
    ReckSmzi,
    #[value(name = "clements-smzi")]
    ClementsSmzi,
    #[value(name = "clements-amzi")]
    ClementsAmzi,
    #[value(name = "clements-edge")]
    ClementsEdge,
}

#[derive(Args, Debug)]
pub struct IoArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Args, Debug)]
pub struct HaarArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OptimizerFlags {
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Run restarts and trials on one thread
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Target matrix file
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Expected number of modes; checked against the target
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub depth: usize,
    /// Standard deviation of the splitter-angle error
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub m: usize,
    /// Comma-separated sigma grid
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<f64>,
    #[arg(long)]
    pub trials: usize,
    /// Comma-separated schemes: clements-smzi, fldzhyan
    #[arg(long, value_delimiter = ',', default_value = "clements-smzi,fldzhyan")]
    pub scheme: Vec<photomesh::sweep::SweepScheme>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw splitter errors uniformly instead of from a Gaussian
    #[arg(long)]
    pub uniform: bool,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose(args) => commands::decompose(&args),
        Command::Reconstruct(args) => commands::reconstruct(&args),
        Command::Relocate(args) => commands::relocate(&args),
        Command::Haar(args) => commands::haar(&args),
        Command::Optimize(args) => commands::optimize(&args),
        Command::Sweep(args) => commands::sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
