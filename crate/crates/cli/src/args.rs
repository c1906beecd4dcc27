use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pstrata::simgen::Scenario;
use pstrata::{CiMethod, EndpointKind, WeightMode};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "pstrata",
    version,
    about = "Principal-stratum effects with missing stratum status"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation scenario and summarize it against the true effects.
    Simulate(SimulateArgs),
    /// Estimate per-stratum effects on a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Report covariate balance of the weighted pseudo-populations.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn threads(&self) -> Option<usize> {
        match self {
            Command::Simulate(a) => a.threads,
            Command::Analyze(a) => a.data.threads,
            Command::Diagnose(a) => a.data.threads,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoint {
    Binary,
    #[value(alias = "time-to-event")]
    Tte,
}

impl From<Endpoint> for EndpointKind {
    fn from(e: Endpoint) -> Self {
        match e {
            Endpoint::Binary => EndpointKind::Binary,
            Endpoint::Tte => EndpointKind::TimeToEvent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Missing-status treated subjects use `B`; controls average over it.
    Marginalized,
    /// One covariates-only stratum model for everyone without status.
    CovariatesOnly,
}

impl From<Mode> for WeightMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Marginalized => WeightMode::Marginalized,
            Mode::CovariatesOnly => WeightMode::CovariatesOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ci {
    Normal,
    Percentile,
}

impl From<Ci> for CiMethod {
    fn from(c: Ci) -> Self {
        match c {
            Ci::Normal => CiMethod::Normal,
            Ci::Percentile => CiMethod::Percentile,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Flat TOML file whose keys are flag names; flags given on the command
    /// line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "binary")]
    pub endpoint: Endpoint,
    #[arg(long, default_value = "proposed")]
    pub scenario: Scenario,
    /// Total sample size, randomized 1:1.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Bootstrap replicates per simulated trial (0 skips SEE and coverage).
    #[arg(long, default_value_t = 1000)]
    pub boot: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub censoring_rate: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub truth_size: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub pilot_size: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub xi: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub beta_binary: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub beta_tte: Option<Vec<f64>>,
    /// JSON result file (stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Per-stratum summary table as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

/// Input file, column mapping and weight model, shared by `analyze` and
/// `diagnose`.
#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Input CSV, one row per subject.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "id")]
    pub id_col: String,
    #[arg(long, default_value = "arm")]
    pub arm_col: String,
    #[arg(long, default_value = "stratum")]
    pub stratum_col: String,
    #[arg(long, default_value = "missing")]
    pub missing_col: String,
    #[arg(long, default_value = "b")]
    pub post_col: String,
    /// Binary outcome column.
    #[arg(long, conflicts_with_all = ["time_col", "event_col"])]
    pub y_col: Option<String>,
    #[arg(long, requires = "event_col")]
    pub time_col: Option<String>,
    #[arg(long, requires = "time_col")]
    pub event_col: Option<String>,
    /// Covariate columns to read (default: every unmapped column).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Covariates entering the weight models (default: all read).
    #[arg(long, value_delimiter = ',')]
    pub weight_covariates: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "marginalized")]
    pub weight_mode: Mode,
    /// Truncate stratum weights at this value.
    #[arg(long)]
    pub max_weight: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    /// Extra token meaning "missing" in the stratum column.
    #[arg(long)]
    pub missing_token: Option<String>,
    /// Stratum names in level order, e.g. `positive,negative`.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    #[arg(long)]
    pub num_strata: Option<usize>,
    /// Drop subjects with event or censoring before this time.
    #[arg(long)]
    pub landmark: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// `proposed`, `complete-case` or `impute:<stratum label or number>`.
    #[arg(long, default_value = "proposed")]
    pub strategy: String,
    #[arg(long, default_value_t = 1000)]
    pub boot: usize,
    #[arg(long, value_enum, default_value = "normal")]
    pub ci: Ci,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Long-format dump of every subject's stratum weights.
    #[arg(long)]
    #[serde(skip)]
    pub weights_out: Option<PathBuf>,
    /// Weighted Kaplan-Meier curves per stratum and arm (survival only).
    #[arg(long)]
    #[serde(skip)]
    pub km_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25")]
    pub thresholds: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Long-format balance table.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}
