use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Skeleton-trajectory action recognition and template-similarity filtering.
#[derive(Debug, Parser)]
#[command(name = "sbt", version)]
pub struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice (data generation, init, shuffling).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic gesture trajectories or clustered embeddings.
    Gen(GenArgs),
    /// Train the window classifier and write a checkpoint.
    Train(TrainArgs),
    /// Classify labeled trajectories by window majority vote and report accuracy.
    Classify(ClassifyArgs),
    /// Accept or reject candidate embeddings by similarity to templates.
    Filter(FilterArgs),
    /// Train and evaluate over a grid of window sizes and steps.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Trajectories,
    Embeddings,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Directory for the generated files (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    #[arg(long, value_enum, default_value_t = GenKind::Trajectories)]
    pub kind: GenKind,

    /// Training trajectories (train.jsonl).
    #[arg(long, default_value_t = 300)]
    pub train: usize,
    /// Test trajectories (test.jsonl).
    #[arg(long, default_value_t = 100)]
    pub test: usize,
    /// 2 = insert/unplug, 3 adds idle.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub classes: u8,
    #[arg(long, default_value_t = 60)]
    pub frames_min: usize,
    #[arg(long, default_value_t = 140)]
    pub frames_max: usize,
    #[arg(long, default_value_t = 18)]
    pub joints: usize,
    /// Coordinate jitter standard deviation.
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,

    /// Embedding dimension.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// In-class candidates.
    #[arg(long, default_value_t = 500)]
    pub n_in: usize,
    /// Out-of-class candidates.
    #[arg(long, default_value_t = 500)]
    pub n_out: usize,
    /// Distance of each cluster centre from the origin along the first axis.
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
}

/// Joint selection and coordinate normalization.
#[derive(Debug, Default, Args)]
pub struct PreprocessArgs {
    /// `all`, `full40`, `active18`, or a comma-separated index list.
    #[arg(long)]
    pub joints: Option<String>,
    /// `none` or `anchor_scale`.
    #[arg(long)]
    pub normalize: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct PipelineArgs {
    /// Window size in frames.
    #[arg(long)]
    pub window_size: Option<usize>,
    /// Window step in frames.
    #[arg(long)]
    pub step: Option<usize>,
    /// Require window size <= frames - step (at least two windows).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
    /// Classify each trajectory as one sequence, without windows.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub whole_sequence: Option<bool>,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

#[derive(Debug, Default, Args)]
pub struct TrainingArgs {
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, alias = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Evenly spaced training windows kept per trajectory; 0 keeps all.
    #[arg(long)]
    pub windows_per_trajectory: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled training trajectories (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss history path [default: <out>.history.json].
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled trajectories (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Window flags override the settings stored in the checkpoint.
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Minimum aggregated cosine similarity to accept [default: 0.85].
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// `max` or `mean` over templates [default: max].
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Also report precision/recall at these thresholds.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep: Option<Vec<f64>>,
    /// Candidate label counted as a true match in `--sweep`.
    #[arg(long, default_value = "in")]
    pub positive_label: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub betas: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub gammas: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
}
