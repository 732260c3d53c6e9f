use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sfv_core::{Backend, NetworkFormat, SplitStrategy};

#[derive(Parser, Debug)]
#[command(
    name = "sfv",
    version,
    about = "Safety-rate verification for feed-forward ReLU decision policies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Verify every property and write per-property and aggregate reports.
    Verify(VerifyArgs),
    /// Compare back-ends (and the informal sampling baseline) over repeated runs.
    Bench(BenchArgs),
    /// Print output bounds of the network over a box.
    Bounds(BoundsArgs),
    /// Dense-grid reference rates and bounds.
    Oracle(OracleArgs),
}

/// Options shared by every subcommand. Unset values fall back to the
/// manifest, then to built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON run manifest.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Network file (JSON or NNet).
    #[arg(long, value_name = "FILE")]
    pub network: Option<PathBuf>,
    /// Network file format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Property files (repeatable).
    #[arg(long, value_name = "FILE")]
    pub props: Vec<PathBuf>,
    /// Bound computation [default: sampled].
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Random forward passes per sampled bound [default: 20].
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    /// Maximum bisection depth [default: 12].
    #[arg(long, value_name = "D")]
    pub max_depth: Option<usize>,
    /// Dimensions narrower than this are not split [default: 1e-6].
    #[arg(long, value_name = "W")]
    pub min_width: Option<f64>,
    /// Split-dimension choice [default: random].
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Seed for splitting and sampling; falls back to SFV_SEED.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "T")]
    pub threads: Option<usize>,
    /// Output directory [default: sfv-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report formats (repeatable or comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub report: Vec<ReportArg>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Back-ends to compare.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "formal,sampled"
    )]
    pub backends: Vec<BackendArg>,
    /// Runs per back-end and property; the seed is offset per run.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Samples for the informal baseline row; 0 drops the row.
    #[arg(long, default_value_t = 10_000)]
    pub informal_samples: usize,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Input box as JSON, e.g. `[[0,1],[-1,1]]`. Defaults to each property box.
    #[arg(long = "box", value_name = "JSON")]
    pub input_box: Option<String>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Input box for grid bounds; defaults to each property box.
    #[arg(long = "box", value_name = "JSON")]
    pub input_box: Option<String>,
    /// Grid points per dimension (capped by the budget).
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    /// Maximum number of grid points.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u128,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Json,
    Nnet,
}

impl From<FormatArg> for NetworkFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => NetworkFormat::Json,
            FormatArg::Nnet => NetworkFormat::NNet,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendArg {
    Formal,
    Sampled,
    Hybrid,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Formal => Backend::Formal,
            BackendArg::Sampled => Backend::Sampled,
            BackendArg::Hybrid => Backend::Hybrid,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitArg {
    Random,
    Widest,
    Roundrobin,
}

impl From<SplitArg> for SplitStrategy {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Random => SplitStrategy::Random,
            SplitArg::Widest => SplitStrategy::WidestDim,
            SplitArg::Roundrobin => SplitStrategy::RoundRobin,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportArg {
    Json,
    Csv,
}
