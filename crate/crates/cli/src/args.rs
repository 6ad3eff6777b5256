//! Flag definitions. Every struct doubles as the schema of the config
//! file, so each long flag has a same-named TOML key.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "blbf", version, about = "Batch learning from logged bandit feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate supervised data (synthetic counting task or IDX files).
    Generate(GenerateArgs),
    /// Train a logging policy on a small subset to a target accuracy band.
    TrainLogger(TrainLoggerArgs),
    /// Convert supervised data to logged bandit feedback.
    Convert(ConvertArgs),
    /// Learn a policy from logged data.
    Train(TrainArgs),
    /// Offline evaluation report on a logged test set.
    Evaluate(EvaluateArgs),
    /// Finite-difference check of the training gradients.
    Gradcheck(GradcheckArgs),
    /// Cross-validated simulation study.
    Simulate(SimulateArgs),
}

/// Optimizer and grid settings shared by `train` and `simulate`.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainOptions {
    /// Policy architecture: `linear` or `hidden:H`.
    #[arg(long)]
    pub arch: Option<String>,
    /// Lambda grid `start:stop:step` in units of the loss range.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Lower bound applied to propensities before division.
    #[arg(long)]
    pub propensity_floor: Option<f64>,
    /// Validation fraction for supervised early stopping.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Where candidates are scored: `training` or `held-out:F`.
    #[arg(long)]
    pub selection: Option<String>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenerateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Synthetic task name (`counting`).
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub seq_len_mean: Option<usize>,
    #[arg(long)]
    pub seq_len_spread: Option<usize>,
    /// IDX image file; use together with `--idx-labels` instead of `--task`.
    #[arg(long)]
    pub idx_images: Option<PathBuf>,
    #[arg(long)]
    pub idx_labels: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainLoggerArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory written by `generate`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `mean-pool`, `last-step` or `mean-pool-static`.
    #[arg(long)]
    pub featurizer: Option<String>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub subset_fraction: Option<f64>,
    /// Target accuracy band `lo:hi`.
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub logger_arch: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConvertArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file written by `train-logger`.
    #[arg(long)]
    pub logger: Option<PathBuf>,
    /// Fraction of groups written to `test.csv`; 0 writes a single `logged.csv`.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Also convert the samples the logging policy was trained on.
    #[arg(long)]
    pub include_logger_subset: Option<bool>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Logged CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// One of dm, rp, ips, tips, eips, etips.
    #[arg(long)]
    pub method: Option<String>,
    /// `logged` or `estimated`.
    #[arg(long)]
    pub propensities: Option<String>,
    /// Number of actions; defaults to the largest logged action + 1.
    #[arg(long)]
    pub actions: Option<usize>,
    #[arg(long)]
    pub propensity_arch: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOptions,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Logged test CSV.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// `name=path` of a policy or loss model file; repeatable.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policy: Vec<String>,
    #[arg(long)]
    pub propensity_model: Option<PathBuf>,
    #[arg(long)]
    pub loss_model: Option<PathBuf>,
    /// Logged CSV the policies were trained on; shared group ids are an error.
    #[arg(long)]
    pub train_manifest: Option<PathBuf>,
    /// Add the random and most-frequent baseline rows.
    #[arg(long)]
    pub baselines: Option<bool>,
    #[arg(long)]
    pub propensity_floor: Option<f64>,
    /// Give loss-model policies the distribution softmax(-loss / T).
    #[arg(long)]
    pub softened_dm: Option<f64>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GradcheckArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Test mode: negate the analytic gradient, which must then FAIL.
    #[arg(long)]
    pub inject_sign_flip: Option<bool>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Methods to run, comma separated (dm,rp,ips,tips,eips,etips,skyline).
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub method: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub featurizer: Option<String>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub offline_report: Option<bool>,
    #[arg(long)]
    pub include_logger_subset: Option<bool>,
    #[arg(long)]
    pub subset_fraction: Option<f64>,
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub logger_arch: Option<String>,
    #[arg(long)]
    pub logger_learning_rate: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOptions,
}
