use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "gsrn", version, about = "Markovian random norms: distribution solvers and expected-norm unit balls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the law of the path integral on a grid.
    Solve(SolveArgs),
    /// Expected-norm unit circle.
    Circle(CircleArgs),
    /// Weak-extension expected-norm unit sphere in three dimensions.
    Sphere(SphereArgs),
    /// Run the invariant suite and write a JSON report.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Upwind,
    Integral,
    Montecarlo,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "GSRN_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Chain size: states 0..=n with slopes k/n.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Birth rate of the chain.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Internal x nodes N (dx = 1/(N+1)).
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Time step; defaults to dx (the stability limit of the upwind scheme).
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Gaussian smoothing of the initial step (upwind only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = Engine::Upwind)]
    pub engine: Engine,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Initial states to keep, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub states: Option<Vec<usize>>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CircleArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Angles in the first octant [0, pi/4].
    #[arg(long, default_value_t = 91)]
    pub angles: usize,
    /// Re-solve the grid recorded in a previous `solve` manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SphereArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Subdivisions per edge of the sorted octant cone.
    #[arg(long, default_value_t = 16)]
    pub resolution: usize,
    /// Re-solve the grid recorded in a previous `solve` manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reduced sample counts and grids.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub out: OutArgs,
}
