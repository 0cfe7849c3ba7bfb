//! Command-line front end.
//!
//! Every subcommand reads its settings from flags, then from an optional
//! `key=value` file given with `--config`, then from defaults. All settings
//! are validated before any computation starts and nothing is written
//! unless the computation succeeds. Exit codes: 0 success, 1 acceptance
//! criteria failed, 2 invalid arguments or configuration, 3 numerical
//! failure.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "magfiber", version, about = "Band functions, asymptotics, classical drift and currents of the unit axisymmetric magnetic field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct Common {
    /// key=value settings file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// worker threads (output does not depend on it)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band functions and both derivatives on a momentum grid (CSV)
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Threshold crossings and their scaling with the coupling (CSV + JSON)
    #[command(allow_negative_numbers = true)]
    Scaling(ScalingArgs),
    /// Expansion coefficients and remainder rate (JSON)
    #[command(allow_negative_numbers = true)]
    Asym(AsymArgs),
    /// Classical trajectory with invariants and drift velocity (CSV + JSON)
    #[command(allow_negative_numbers = true)]
    Classical(ClassicalArgs),
    /// Edge and bulk currents in a spectral window (JSON)
    #[command(allow_negative_numbers = true)]
    Current(CurrentArgs),
    /// Grid-refinement study of one eigenvalue (CSV + JSON)
    #[command(allow_negative_numbers = true)]
    Convergence(ConvergenceArgs),
    /// Run the acceptance criteria, one PASS/FAIL line each
    Acceptance(AcceptanceArgs),
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub p_min: Option<u32>,
    #[arg(long)]
    pub p_max: Option<u32>,
    #[arg(long)]
    pub xi_min: Option<f64>,
    #[arg(long)]
    pub xi_max: Option<f64>,
    #[arg(long)]
    pub xi_step: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    /// CSV path (stdout when absent)
    #[arg(long)]
    pub output: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct ScalingArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// grid step of the crossing solves
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub output: Option<String>,
    /// JSON summary path (stdout when absent)
    #[arg(long)]
    pub report: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct AsymArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Hermite basis size (default p + 2 order + 8)
    #[arg(long)]
    pub basis: Option<usize>,
    #[arg(long)]
    pub xi_min: Option<f64>,
    #[arg(long)]
    pub xi_max: Option<f64>,
    #[arg(long)]
    pub xi_step: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    /// second coupling used to flag coupling dependence of the coefficients
    #[arg(long)]
    pub reference_k: Option<f64>,
    #[arg(long)]
    pub report: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct ClassicalArgs {
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub z0: Option<f64>,
    #[arg(long)]
    pub vr: Option<f64>,
    #[arg(long)]
    pub vtheta: Option<f64>,
    #[arg(long)]
    pub vz: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// keep every stride-th step in the CSV
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub report: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct CurrentArgs {
    #[arg(long)]
    pub n: Option<u32>,
    /// lower end of the energy window
    #[arg(long)]
    pub window_a: Option<f64>,
    /// upper end of the energy window
    #[arg(long)]
    pub window_b: Option<f64>,
    #[arg(long)]
    pub edge_m_max: Option<u32>,
    /// comma-separated cut-offs M; the bulk mode is m = M + 1
    #[arg(long, value_delimiter = ',')]
    pub bulk: Option<Vec<u32>>,
    /// comma-separated cut-offs searched for a packet with |current| <= 1e-2
    #[arg(long, value_delimiter = ',')]
    pub extended: Option<Vec<u32>>,
    /// skip the extended list
    #[arg(long)]
    pub skip_extended: bool,
    #[arg(long)]
    pub band_samples: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub report: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// intervals of the coarsest grid
    #[arg(long)]
    pub intervals: Option<usize>,
    /// number of grids, each doubling the previous
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub report: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct AcceptanceArgs {
    /// comma-separated criterion numbers (all when absent)
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u32>>,
    #[arg(long)]
    pub report: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

/// Exit code for an error: numerical failures map to 3, the rest to 2.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
