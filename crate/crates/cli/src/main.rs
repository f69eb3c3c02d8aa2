//! `vring`: command-line front end for the vortex-ring library.
//!
//! Exit codes: 0 success, 1 runtime or domain error, 2 usage error,
//! 3 failed acceptance check.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vring", version, about = "Axisymmetric vortex rings: kernels, maximizers, evolution")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Output format for records.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// JSON file of option values; flags on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Evaluate every kernel table entry by direct quadrature instead of the
    /// memoized profile.
    #[arg(long, global = true)]
    pub direct_kernel: bool,

    /// Absolute tolerance of the kernel quadrature.
    #[arg(long, allow_negative_numbers = true, global = true, default_value_t = 1e-12)]
    pub kernel_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form quantities of a Hill's vortex.
    Hill(HillArgs),
    /// Tabulate the kernel profile F(s) and its asymptotes.
    KernelTable(KernelTableArgs),
    /// Solve for the stream function of a vorticity field.
    Stream(StreamArgs),
    /// Distances between two vorticity snapshots.
    Compare(CompareArgs),
    /// Maximize kinetic energy under impulse and circulation constraints.
    Maximize(MaximizeArgs),
    /// Advect a vorticity field and log conserved quantities.
    Evolve(EvolveArgs),
    /// Orbital distance to Hill's vortex along an evolution.
    Stability(StabilityArgs),
    /// Closed-form comparison of the Wan and orbital metrics.
    Wan(WanArgs),
    /// Run the acceptance checks and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct HillArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct KernelTableArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-6)]
    pub s_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e6)]
    pub s_max: f64,
    #[arg(long, default_value_t = 49)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Cells as NRxNZ.
    #[arg(long, default_value = "128x256")]
    pub grid: String,
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub rmax: f64,
    /// The grid covers |z| ≤ zmax.
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub zmax: f64,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Snapshot file or hill:LAMBDA,A,C.
    #[arg(long, default_value = "hill:1,1,0")]
    pub init: String,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write the stream-function snapshot here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Also minimize the combined metric over axial shifts.
    #[arg(long)]
    pub orbital: bool,
    /// Also report the Wan metric.
    #[arg(long)]
    pub wan: bool,
}

#[derive(Debug, Args)]
pub struct MaximizeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value = "96x192")]
    pub grid: String,
    #[arg(long, allow_negative_numbers = true, default_value_t = 2.5)]
    pub rmax: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 2.5)]
    pub zmax: f64,
    /// Initial vorticity snapshot (defaults to a solid torus).
    #[arg(long)]
    pub seed: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-10)]
    pub set_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub symmetrize_every: usize,
    /// Directory for xi.snap and result.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveOpts {
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub t_end: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    pub cfl: f64,
    #[arg(long, default_value_t = 1)]
    pub resolve_every: usize,
    #[arg(long, default_value_t = 1)]
    pub diag_every: usize,
    /// Level bands as A:B, comma separated.
    #[arg(long, default_value = "0.5:1.5")]
    pub bands: String,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Snapshot file or hill:LAMBDA,A,C.
    #[arg(long, default_value = "hill:1,1,0")]
    pub init: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub opts: EvolveOpts,
    /// Write a snapshot every this many diagnostic records (0: first and last only).
    #[arg(long, default_value_t = 0)]
    pub snap_every: usize,
    /// Directory for snapshots and log.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// none, radius:A or bump:W.
    #[arg(long, default_value = "none")]
    pub perturb: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub opts: EvolveOpts,
    /// Allowed multiple of the initial distance.
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub factor: f64,
    /// Scheme-error floor; measured from an unperturbed run when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WanArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    /// Sample times, comma separated.
    #[arg(long, allow_negative_numbers = true, default_value = "0,50,100,200", value_delimiter = ',')]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Only these criteria, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match config::parse_with_config(&argv) {
        Ok(cli) => cli,
        Err(config::ParseError::Clap(e)) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
        Err(config::ParseError::Config(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<commands::UsageError>().is_some();
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
