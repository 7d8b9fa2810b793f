use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "riskbench", version, about = "Benchmark suite for player risk detection models")]
pub struct Cli {
    /// Registry root; defaults to $RISKBENCH_HOME, then the user data directory.
    #[arg(long, global = true, env = "RISKBENCH_HOME")]
    pub home: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory from a config or preset.
    Generate(GenerateArgs),
    /// Register a dataset directory (or explicit files) in the registry.
    Register(RegisterArgs),
    /// List registered datasets, optionally filtered by card dimensions.
    List(ListArgs),
    /// Verify the stored checksums of a registered dataset.
    Verify(VerifyArgs),
    /// Materialize a benchmark task bundle from a registered dataset.
    Materialize(MaterializeArgs),
    /// Validate and score a submission file locally, without recording it.
    Score(ScoreArgs),
    /// Score a submission and record it in the local ledger or on a server.
    Submit(SubmitArgs),
    /// Print the ranked leaderboard of a task.
    Leaderboard(LeaderboardArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator config JSON.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset: universal, lottery, highly_engaged or early_risk.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config player count.
    #[arg(long)]
    pub n_players: Option<u32>,
    /// Overrides the config signal strength.
    #[arg(long)]
    pub signal_strength: Option<f64>,
    /// Overrides the config prevalence.
    #[arg(long)]
    pub prevalence: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Directory with events.csv, labels.csv, card.json and optionally manifest.json.
    #[arg(required_unless_present_all = ["events", "labels", "card"])]
    pub dir: Option<PathBuf>,
    #[arg(long, conflicts_with = "dir", requires_all = ["labels", "card"])]
    pub events: Option<PathBuf>,
    #[arg(long, conflicts_with = "dir")]
    pub labels: Option<PathBuf>,
    #[arg(long, conflicts_with = "dir")]
    pub card: Option<PathBuf>,
    #[arg(long, conflicts_with = "dir")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long)]
    pub vertical: Option<String>,
    #[arg(long)]
    pub engagement_level: Option<String>,
    #[arg(long)]
    pub min_horizon_days: Option<u32>,
    #[arg(long)]
    pub max_horizon_days: Option<u32>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Dataset reference, `id@version`.
    pub dataset: String,
}

#[derive(Debug, Args)]
pub struct MaterializeArgs {
    /// Dataset reference, `id@version`.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Built-in task template (B1, B2, U1, U2, V1, L1, H1).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub task: Option<String>,
    /// Full task spec JSON instead of a template.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Task id to publish under; defaults to the template id.
    #[arg(long)]
    pub task_id: Option<String>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub salt: Option<String>,
    /// Replace an existing task with a different spec.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub task: String,
    /// Submission CSV.
    #[arg(long)]
    pub file: PathBuf,
    /// Timestamp recorded as scored_at (YYYY-MM-DDTHH:MM:SSZ); defaults to now.
    #[arg(long)]
    pub scored_at: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvidenceArgs {
    #[arg(long)]
    pub code_url: Option<String>,
    #[arg(long)]
    pub publication_ref: Option<String>,
    #[arg(long)]
    pub container_digest: Option<String>,
}

#[derive(Debug, Args)]
pub struct SubmitArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub file: PathBuf,
    #[arg(long)]
    pub submitter: String,
    #[command(flatten)]
    pub evidence: EvidenceArgs,
    /// Base URL of a running server; records locally when absent.
    #[arg(long)]
    pub remote: Option<String>,
}

#[derive(Debug, Args)]
pub struct LeaderboardArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub remote: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = riskbench_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
}

pub fn usage() -> String {
    Cli::command().render_usage().to_string()
}
