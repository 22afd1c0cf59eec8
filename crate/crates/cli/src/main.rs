#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use melvin_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "melvin",
    version,
    about = "Graph surfaces, Q functional and weighted normal flow in AdS-Melvin space"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Magnetic charge parameter (b >= 0).
    #[arg(
        long,
        global = true,
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    pub b: f64,
    /// Period of the x coordinate.
    #[arg(
        long,
        global = true,
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    pub px: f64,
    #[arg(long, global = true, default_value_t = 64)]
    pub nx: usize,
    #[arg(long, global = true, default_value_t = 64)]
    pub ny: usize,
    /// Finite-difference order (2, 4 or 6). Defaults to 4, or 6 for `symmetric`.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Minimum allowed height above r_s.
    #[arg(long, global = true, default_value_t = melvin_core::DEFAULT_MARGIN)]
    pub margin: f64,
    /// Seed for `random:` generators given without one.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Built-in surface: const:r0 | cos:r0,ax,kx,ay,ky | random:r0,amp,bandlimit[,seed]
    #[arg(long, global = true)]
    pub gen: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// r_s, P_y and curvature at sample radii.
    Space,
    /// Q, gap and inequality verdict for a surface.
    Q(SurfaceArgs),
    /// Run the weighted normal flow and write diagnostics.
    Flow(FlowArgs),
    /// Derivatives of Q along r0 + eps*phi.
    Perturb(PerturbArgs),
    /// Gap of a one-dimensional profile by the direct and integrated-by-parts forms.
    Symmetric(SymmetricArgs),
    /// Run the finite-difference verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct SurfaceArgs {
    /// Surface JSON file {b, Px, nx, ny, s}.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, default_value_t = 30.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    /// Record diagnostics every this many steps.
    #[arg(long, default_value_t = 10)]
    pub sample_every: usize,
    /// Also write the final surface as JSON.
    #[arg(long)]
    pub save_surface: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[arg(long, default_value_t = 2.0)]
    pub r0: f64,
    /// JSON file {nx, ny, phi} or cos:kx,ky
    #[arg(long, default_value = "cos:1,0")]
    pub phi: String,
    /// Largest perturbation size; defaults to 0.01*(r0 - r_s).
    #[arg(long)]
    pub eps0: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SymmetricArgs {
    /// Coordinate the profile depends on: x gives s(x), y gives s(y).
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Profile JSON file {b, Px, n, s}.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisArg {
    X,
    Y,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// ambient | surface | evolution | monotone | all
    #[arg(long, default_value = "all")]
    pub suite: String,
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_)
        | Error::Config(_)
        | Error::BelowMargin { .. }
        | Error::Io(_)
        | Error::Json(_) => 1,
        Error::Breakdown { .. } | Error::Consistency(_) => 2,
        Error::Property(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
