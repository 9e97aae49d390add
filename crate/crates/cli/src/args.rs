use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modereg::links::LinkKind;
use modereg::regression::Family;
use modereg::simharness::ScenarioId;

#[derive(Parser, Debug)]
#[command(name = "modereg", version, about = "Parametric mode regression for responses in (0,1)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model and report estimates as JSON
    Fit(FitArgs),
    /// Half-normal plot data with a simulated envelope (CSV)
    Envelope(EnvelopeArgs),
    /// Bootstrap score test of the assumed mode model (JSON)
    Scoretest(ScoreTestArgs),
    /// Per-row prediction intervals (CSV)
    Predict(PredictArgs),
    /// Cross-validated interval coverage curve (CSV)
    Coverage(CoverageArgs),
    /// Generate scenario data or run a Monte Carlo study
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Input CSV with a header row
    #[arg(short, long)]
    pub input: PathBuf,
    /// Response column
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Covariate columns (default: every column except the response)
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Expand a categorical covariate into indicators, first level as reference
    #[arg(long = "dummy", value_name = "COLUMN")]
    pub dummies: Vec<String>,
    /// Divide responses by this value (must exceed the largest response)
    #[arg(long)]
    pub rescale_divisor: Option<f64>,
    /// Map responses with (y(n-1)+0.5)/n when any equals 0 or 1
    #[arg(long)]
    pub squeeze: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_family, default_value = "beta_mode")]
    pub family: Family,
    #[arg(long, value_parser = parse_link, default_value = "logit")]
    pub link: LinkKind,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SeedArgs {
    /// Random seed; MODEREG_SEED overrides the built-in default
    #[arg(long, env = "MODEREG_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also fit every link and tabulate log-likelihoods
    #[arg(long)]
    pub compare_links: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Number of simulated response sets
    #[arg(long, default_value_t = 19)]
    pub k: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write a JSON summary (proportion outside) here
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScoreTestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Bootstrap samples
    #[arg(short, long, default_value_t = 300)]
    pub b: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Nominal masses of the density-based intervals
    #[arg(short, long, value_delimiter = ',', default_value = "0.1,0.2,0.5")]
    pub q: Vec<f64>,
    /// Width multipliers of fixed-width intervals (optional)
    #[arg(short, long, value_delimiter = ',')]
    pub k: Vec<f64>,
    /// Covariate rows to predict at (default: the fitting rows)
    #[arg(long)]
    pub new: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Nominal masses (density-based intervals)
    #[arg(short, long, value_delimiter = ',', conflicts_with = "k")]
    pub q: Vec<f64>,
    /// Width multipliers (fixed-width intervals, leave-one-out)
    #[arg(short, long, value_delimiter = ',')]
    pub k: Vec<f64>,
    /// Number of folds; 0 means leave-one-out
    #[arg(long, default_value_t = 0)]
    pub folds: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum Study {
    Mle,
    Power,
    Coverage,
    Envelope,
    EnvelopeStudy,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Run a Monte Carlo study instead of writing one dataset
    #[arg(long, value_enum)]
    pub study: Option<Study>,
    /// TOML file with study settings; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_scenario)]
    pub scenario: Vec<ScenarioId>,
    /// Sample size(s)
    #[arg(short, long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// True shape (default: the scenario's study value)
    #[arg(short, long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(short, long)]
    pub b: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(short, long, value_delimiter = ',')]
    pub q: Vec<f64>,
    /// Assumed family for power and envelope studies
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Replicate index of a single generated dataset
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    /// Reduced replicate and bootstrap counts (50 and 100)
    #[arg(long)]
    pub fast: bool,
    #[arg(long, env = "MODEREG_SEED")]
    pub seed: Option<u64>,
    /// Dataset CSV, or study JSON
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Plot-ready CSV of the study result
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the true mode of each generated row here
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: modereg::Error| e.to_string())
}

fn parse_link(s: &str) -> Result<LinkKind, String> {
    s.parse().map_err(|e: modereg::Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<ScenarioId, String> {
    s.parse().map_err(|e: modereg::Error| e.to_string())
}
