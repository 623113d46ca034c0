use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use uwb_posture::classifiers::{GridSearchSpec, MlpConfig};
use uwb_posture::commander::RobotKind;
use uwb_posture::evaluation::AblationPolicy;
use uwb_posture::{ModelKind, ModelSpec, NodeSet, NoiseScenario};

#[derive(Debug, Parser)]
#[command(
    name = "uwbpose",
    version,
    about = "Posture classification from pairwise UWB ranges"
)]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, env = "UWBPOSE_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    GenData(GenDataArgs),
    /// Fit a model on every subject and save it as JSON.
    Train(TrainArgs),
    /// Leave-one-subject-out evaluation of one model.
    Evaluate(EvaluateArgs),
    /// Evaluate models under the four noise scenarios.
    SweepNoise(SweepArgs),
    /// Evaluate models with 5, 4, 3 and 2 nodes.
    AblateNodes(AblateArgs),
    /// Drive simulated robots from a recorded or live range stream.
    Replay(ReplayArgs),
    /// Per-class metrics of a confusion matrix CSV.
    Metrics(MetricsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::SweepNoise(_) => "sweep-noise",
            Command::AblateNodes(_) => "ablate-nodes",
            Command::Replay(_) => "replay",
            Command::Metrics(_) => "metrics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 5)]
    pub subjects: usize,
    #[arg(long, default_value_t = 400)]
    pub per_posture: usize,
    /// Ranging error standard deviation, meters.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.08)]
    pub scale_jitter: f64,
    /// Per-frame node displacement standard deviation, meters.
    #[arg(long, default_value_t = 0.02)]
    pub pose_jitter: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_kind, default_value = "knn")]
    pub model: ModelKind,
    /// Choose k or (C, gamma) by subject-wise validation on the training
    /// subjects instead of using the fixed values.
    #[arg(long)]
    pub select: bool,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub k_candidates: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100")]
    pub c_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1")]
    pub gamma_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
}

impl ModelArgs {
    pub fn spec_for(&self, kind: ModelKind, seed: u64) -> ModelSpec {
        match (kind, self.select) {
            (ModelKind::Knn, false) => ModelSpec::knn(self.k),
            (ModelKind::Knn, true) => ModelSpec::knn_elbow(self.k_candidates.clone()),
            (ModelKind::Svm, false) => ModelSpec::svm(self.c, self.gamma),
            (ModelKind::Svm, true) => ModelSpec::svm_grid(GridSearchSpec {
                c_values: self.c_grid.clone(),
                gamma_values: self.gamma_grid.clone(),
            }),
            (ModelKind::Mlp, _) => ModelSpec::mlp(MlpConfig {
                hidden: self.hidden.clone(),
                learning_rate: self.learning_rate,
                momentum: self.momentum,
                epochs: self.epochs,
                batch_size: self.batch_size,
                seed,
            }),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NoiseArgs {
    /// none, train-only, test-only or both.
    #[arg(long, value_parser = parse_scenario, default_value = "none")]
    pub noise: NoiseScenario,
    /// Half-width of the uniform range perturbation, meters.
    #[arg(long, default_value_t = 0.30)]
    pub noise_magnitude: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// `all` or a comma list of node names or indices.
    #[arg(long, value_parser = parse_nodes, default_value = "all")]
    pub nodes: NodeSet,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_parser = parse_nodes, default_value = "all")]
    pub nodes: NodeSet,
    /// `csv` writes the aggregated confusion matrix only.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Defaults to standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "knn,svm,mlp")]
    pub models: Vec<ModelKind>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.30)]
    pub noise_magnitude: f64,
    #[arg(long, value_parser = parse_nodes, default_value = "all")]
    pub nodes: NodeSet,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "knn,svm,mlp")]
    pub models: Vec<ModelKind>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// fixed-order or all-subsets.
    #[arg(long, value_parser = parse_policy, default_value = "fixed-order")]
    pub policy: AblationPolicy,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Newline-delimited JSON frames; `-` reads standard input.
    #[arg(long)]
    pub stream: PathBuf,
    #[arg(long, value_parser = parse_robot, value_delimiter = ',', default_value = "aerial,ground")]
    pub robots: Vec<RobotKind>,
    /// Majority-vote window, frames.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 0.2)]
    pub v_lin: f64,
    #[arg(long, default_value_t = 0.5)]
    pub v_yaw: f64,
    #[arg(long, default_value_t = 0.2)]
    pub v_z: f64,
    /// Frames buffered from standard input before the oldest is dropped.
    #[arg(long, default_value_t = 64)]
    pub queue: usize,
    /// Write 0 instead of measured per-frame latency, for reproducible logs.
    #[arg(long)]
    pub omit_latency: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Report a single class (0-8) instead of all nine.
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: uwb_posture::Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<NoiseScenario, String> {
    s.parse().map_err(|e: uwb_posture::Error| e.to_string())
}

fn parse_nodes(s: &str) -> Result<NodeSet, String> {
    s.parse().map_err(|e: uwb_posture::Error| e.to_string())
}

fn parse_policy(s: &str) -> Result<AblationPolicy, String> {
    s.parse().map_err(|e: uwb_posture::Error| e.to_string())
}

fn parse_robot(s: &str) -> Result<RobotKind, String> {
    s.parse().map_err(|e: uwb_posture::Error| e.to_string())
}
