//! Command-line surface. Parsing only; everything is turned into a
//! [`RunConfig`](crate::RunConfig) before any work starts.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mess", version, about = "Maximum entropy snapshot sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Generate a snapshot matrix.
    Gen(GenArgs),
    /// Select snapshots and write the entropy trace.
    Sample(SampleArgs),
    /// Build a reduced basis from sampled snapshots (or by POD).
    Basis(BasisArgs),
    /// Project every snapshot onto the sampled basis.
    Compress(SampleArgs),
    /// Sampled basis against truncated SVD at equal size.
    Compare(SampleArgs),
    /// Basis size, error and time over a list of radii.
    Sweep(SweepArgs),
    /// Galerkin reduced model of the brusselator with both bases.
    Rom(RomArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EpsModeArg {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Messbin,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Brusselator,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mess,
    Pod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Potential,
    Entropy,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Format for matrix outputs; defaults to the input format, or csv.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, env = "MESS_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Overrides the format guessed from the file extension.
    #[arg(long, value_enum)]
    pub input_format: Option<FormatArg>,
}

#[derive(Debug, Clone, Args)]
pub struct EpsArgs {
    /// Ball radius; a fraction of the snapshot diameter in relative mode.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "relative")]
    pub eps_mode: EpsModeArg,
}

#[derive(Debug, Clone, Args)]
pub struct StopArgs {
    #[arg(long, requires = "stop_window")]
    pub stop_tol: Option<f64>,
    #[arg(long, requires = "stop_tol")]
    pub stop_window: Option<usize>,
    #[arg(long, value_enum, default_value = "potential")]
    pub stop_criterion: CriterionArg,
    /// Keep only selected snapshots in memory; the trace becomes a lower bound.
    #[arg(long)]
    pub streaming: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub eps: EpsArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    #[arg(long, default_value_t = mess::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BasisArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "mess")]
    pub method: MethodArg,
    /// Required for the mess method.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum, default_value = "relative")]
    pub eps_mode: EpsModeArg,
    /// Energy truncation level for the pod method.
    #[arg(long, conflicts_with = "rank")]
    pub energy_eps: Option<f64>,
    /// Fixed number of POD modes.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = mess::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated radii; defaults to 0.01, 0.02, ..., 0.25.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "relative")]
    pub eps_mode: EpsModeArg,
    #[arg(long, default_value_t = mess::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BrusselatorArgs {
    #[arg(long, default_value_t = 100)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 0.02)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 500)]
    pub snapshots: usize,
    #[arg(long, default_value_t = 5e-4)]
    pub dt: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "brusselator")]
    pub source: SourceArg,
    #[command(flatten)]
    pub brusselator: BrusselatorArgs,
    /// State dimension of the random walk.
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RomArgs {
    #[command(flatten)]
    pub brusselator: BrusselatorArgs,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "relative")]
    pub eps_mode: EpsModeArg,
    #[arg(long, default_value_t = mess::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
