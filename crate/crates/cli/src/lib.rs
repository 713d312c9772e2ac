//! Command-line front end for the AES simulator: scenario files, campaigns,
//! solver and integrator utilities, CSV and plot-data output.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
//! runtime failures (I/O, solver or integrator non-convergence).

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aes-sim", version, about = "AES sensor-network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its CSV row.
    Simulate(SimulateArgs),
    /// Run a multi-seed campaign across protocols and write the report bundle.
    Compare(CompareArgs),
    /// Solve the detection thresholds and print the solution.
    DetectSolve(DetectSolveArgs),
    /// Integrate a test system and write (time, energy) plot data.
    Integrate(IntegrateArgs),
    /// Print the effective configuration as TOML.
    DumpConfig(DumpConfigArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "aes")]
    pub protocol: String,
    /// Overrides the base seed of the config and the environment.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `all` or a comma-separated list such as `aes,smac,tmac`.
    #[arg(long, default_value = "all")]
    pub protocols: String,
    /// Seeds per protocol; defaults to `runs` from the config.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Skip the node-count and transmitter sweeps.
    #[arg(long)]
    pub no_sweeps: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectSolveArgs {
    #[arg(long)]
    pub alpha: f64,
    /// ROC sensitivity.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0)]
    pub kmax: usize,
    /// Sample-count probabilities p_0..p_kmax; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub pk: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub k_offset: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    Oscillator,
    Pendulum,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long, value_enum)]
    pub system: SystemKind,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub h: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 2)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub q0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub p0: f64,
    /// Plot-data file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit code.
/// Diagnostics go to standard error as a single line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::cmd_simulate(&a),
        Command::Compare(a) => commands::cmd_compare(&a),
        Command::DetectSolve(a) => commands::cmd_detect_solve(&a).map(|text| print!("{text}")),
        Command::Integrate(a) => commands::cmd_integrate(&a),
        Command::DumpConfig(a) => commands::cmd_dump_config(&a).map(|text| print!("{text}")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aes-sim: {e}");
            e.exit_code()
        }
    }
}
