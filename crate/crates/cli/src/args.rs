use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Spectral gating network experiments.
///
/// Settings are resolved as built-in defaults, then the JSON file given by
/// --config, then command-line flags; later sources win.
#[derive(Debug, Parser)]
#[command(name = "sgn", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed; multi-seed runs use seed, seed+1, ...
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "sgn-out")]
    pub out: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// JSON file with settings for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic against numeric gradients on random tiny blocks.
    Gradcheck(GradcheckArgs),
    /// Homotopy-initialization identities and basis containment.
    Homotopy(HomotopyArgs),
    /// Fourier-feature kernel approximation error against budget.
    Kernel(KernelArgs),
    /// Optimal frequency scale from the GELU spectrum.
    DeriveSigma(DeriveSigmaArgs),
    /// Parameter and FLOPs table across spline grid sizes.
    Complexity(ComplexityArgs),
    /// Budget-matched fitting suite.
    Fit(FitArgs),
    /// Spectra of sin/cos fits over a wide interval.
    Sincos(SincosArgs),
    /// Extrapolation of x^2 outside the training interval.
    Extrapolate(ExtrapolateArgs),
    /// Per-band convergence on a three-tone target.
    Probe(ProbeArgs),
    /// Learned gate against fixed gate and no gate.
    GateAblation(GateAblationArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gradcheck(_) => "gradcheck",
            Self::Homotopy(_) => "homotopy",
            Self::Kernel(_) => "kernel",
            Self::DeriveSigma(_) => "derive-sigma",
            Self::Complexity(_) => "complexity",
            Self::Fit(_) => "fit",
            Self::Sincos(_) => "sincos",
            Self::Extrapolate(_) => "extrapolate",
            Self::Probe(_) => "probe",
            Self::GateAblation(_) => "gate-ablation",
        }
    }
}

/// Architecture flags shared by the SGN-based runners.
#[derive(Debug, Default, Args)]
pub struct BlockArgs {
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub gate_bias: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HomotopyArgs {
    #[arg(long)]
    pub d_model: Option<usize>,
    #[command(flatten)]
    pub block: BlockArgs,
    #[arg(long)]
    pub instances: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Kernel bandwidth.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated feature budgets.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Number of independent draws per budget.
    #[arg(long)]
    pub draws: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DeriveSigmaArgs {
    /// Simpson subintervals.
    #[arg(long)]
    pub n: Option<usize>,
    /// Half-width of the integration range.
    #[arg(long)]
    pub range: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated spline grid sizes.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Spline order.
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Comma-separated task names.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<String>>,
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SincosArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Epochs on the base branch before the spectral branch is enabled.
    #[arg(long)]
    pub base_epochs: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GateAblationArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<String>>,
    #[arg(long)]
    pub seeds: Option<usize>,
}
