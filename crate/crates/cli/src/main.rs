//! `shaperec` command-line front end.

mod commands;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shaperec::{HalfPlane, Method, NoiseModel, NormP, Point, Shape, ShapeSpec};

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "shaperec", version, about = "Shape and state recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error of each method over a list of grid sizes, as CSV.
    Convergence(ConvergenceArgs),
    /// One reconstruction as JSON, optionally drawn as SVG.
    Reconstruct(ReconstructArgs),
    /// Empirical stability constants of the half-plane stencil, as JSON.
    Stability(StabilityArgs),
    /// Best fit and generalized interpolation bounds on random problems, as CSV.
    Pbdw(PbdwArgs),
    /// Instance optimality of expander-matrix decoding, as CSV.
    Cs(CsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ShapeKind {
    Disk,
    Halfplane,
    Square,
}

#[derive(Args, Debug)]
pub struct ShapeArgs {
    #[arg(long, value_enum, default_value = "disk")]
    shape: ShapeKind,
    /// Disk or square center; anchor of a half-plane.
    #[arg(long, default_value_t = 0.53)]
    cx: f64,
    #[arg(long, default_value_t = 0.51)]
    cy: f64,
    /// Disk radius.
    #[arg(long, default_value_t = 0.325)]
    r: f64,
    /// Half-plane normal angle, or square rotation.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    /// Half-plane offset from the anchor along the normal.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
    /// Square half width.
    #[arg(long, default_value_t = 0.2)]
    half_width: f64,
}

impl ShapeArgs {
    fn spec(&self) -> CliResult<ShapeSpec> {
        let center = Point::new(self.cx, self.cy);
        Ok(match self.shape {
            ShapeKind::Disk => ShapeSpec::disk(self.cx, self.cy, self.r)?,
            ShapeKind::Halfplane => ShapeSpec::half_plane(HalfPlane::new(self.theta, self.c, center)),
            ShapeKind::Square => ShapeSpec::new(Shape::RotatedSquare { center, half_width: self.half_width, angle: self.theta }, 0.0)?,
        })
    }
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    /// Norm of the noise vector: 1, 2 or inf.
    #[arg(long, default_value = "inf")]
    noise_p: NormP,
    #[arg(long, default_value_t = 0.0)]
    noise_eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl NoiseArgs {
    fn model(&self) -> CliResult<NoiseModel> {
        if !(self.noise_eps >= 0.0 && self.noise_eps.is_finite()) {
            return Err(CliError::Config(format!("noise level must be finite and nonnegative, got {}", self.noise_eps)));
        }
        Ok(NoiseModel { p: self.noise_p, eps: self.noise_eps, seed: self.seed })
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Exact,
    Midpoint,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, value_delimiter = ',', default_value = "pc,l1,li,licc")]
    method: Vec<Method>,
    /// Center weight of licc.
    #[arg(long, default_value_t = 100.0)]
    weight: f64,
    /// Cells per side, comma separated powers of two.
    #[arg(long = "L", value_delimiter = ',', default_value = "16,32,64,128,256")]
    levels: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, value_enum, default_value = "exact")]
    quadrature: Quadrature,
    /// Midpoint subsamples per cell side.
    #[arg(long, default_value_t = 32)]
    subsamples: usize,
    /// Leave the fit_seconds column empty so repeated runs are byte identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value = "licc")]
    method: Method,
    #[arg(long, default_value_t = 100.0)]
    weight: f64,
    #[arg(long = "L", default_value_t = 32)]
    cells: usize,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Cell side of the stencil.
    #[arg(long, default_value_t = 0.015625)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PbdwArgs {
    /// Ambient dimension D.
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Number of measurements.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Dimension of the reduced space.
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// ℓ² norm of the measurement noise.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Largest distance of a state from the reduced space.
    #[arg(long, default_value_t = 1.0)]
    tail: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CsInput {
    Compressible,
    Sparse,
}

#[derive(Args, Debug)]
pub struct CsArgs {
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long = "N", default_value_t = 20)]
    cols: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Sparsity of the decoder; expansion is certified at order 2n.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, value_enum, default_value = "compressible")]
    input: CsInput,
    #[arg(long, default_value_t = 0.5)]
    eps_max: f64,
    #[arg(long, default_value_t = 1000)]
    retries: u64,
    #[arg(long, default_value_t = 100_000)]
    rip_trials: usize,
    /// First seed of the certification sweep; also seeds the trials.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Convergence(a) => commands::convergence(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Stability(a) => commands::stability(&a),
        Command::Pbdw(a) => commands::pbdw(&a),
        Command::Cs(a) => commands::cs(&a),
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
        Err(e) => {
            eprintln!("shaperec: {e}");
            e.exit_code()
        }
    }
}
