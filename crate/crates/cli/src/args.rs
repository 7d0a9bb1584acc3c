use std::path::PathBuf;

use bident_core::NormalizationMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bident", version, about = "Bidirectional-entailment evaluation of machine translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score datasets with the entailment metric.
    Score(ScoreArgs),
    /// Correlate system scores with human scores.
    Evaluate(EvaluateArgs),
    /// Turn line-aligned candidate/reference files into a JSONL dataset.
    Convert(ConvertArgs),
    /// Score datasets with BLEU, WER, PER or TER.
    Baseline(BaselineArgs),
    /// Talk to the entailment backend.
    #[command(subcommand)]
    Nli(NliCommand),
}

#[derive(Debug, Subcommand)]
pub enum NliCommand {
    /// Health check plus one classification round-trip.
    Ping(PingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Mock,
    Remote,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Entailment backend [default: mock]
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Inference server base URL; falls back to BIDENT_NLI_ENDPOINT
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model id to record and key the cache with; asked from the server if omitted
    #[arg(long)]
    pub model_id: Option<String>,
    /// Per-request timeout in seconds [default: 30]
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Dataset JSONL, one per language pair
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Segment score normalization: none, max, mean or minmax [default: none]
    #[arg(long)]
    pub norm: Option<NormalizationMode>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Backend batches in flight [default: 4]
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Pairs per backend request [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// JSONL cache of classifier outputs
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// JSON file with defaults for any of the options above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// System score JSONL files (from `score` or `baseline`)
    #[arg(long = "scores", required = true)]
    pub scores: Vec<PathBuf>,
    /// Human score sidecar JSONL files
    #[arg(long = "human", required = true)]
    pub human: Vec<PathBuf>,
    /// Only report these metrics (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    /// Test whether METRIC correlates better than BASELINE (one-tailed t-test paired over language pairs)
    #[arg(long, value_delimiter = ',', num_args = 1, value_names = ["METRIC,BASELINE"])]
    pub significance: Option<Vec<String>>,
    /// Significance level of the test; p below it counts as significant [default: 0.01]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with option defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Candidate translations, one per line
    #[arg(long)]
    pub candidates: PathBuf,
    /// References, line-aligned with the candidates
    #[arg(long)]
    pub references: PathBuf,
    /// System name for every record
    #[arg(long)]
    pub system: String,
    /// Language pair for every record, e.g. de-en
    #[arg(long)]
    pub lang_pair: String,
    /// Directory for dataset.jsonl and run.json; stdout if omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Dataset JSONL, one per language pair
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    /// Comma separated subset of bleu,wer,per,ter [default: all four]
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with option defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PingArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    /// JSON file with option defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
}
