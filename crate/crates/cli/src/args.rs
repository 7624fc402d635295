use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tkrr", version, about = "Tensor kernel machine seizure detection toolkit")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-patient cohort of two-channel recordings.
    Synth(SynthArgs),
    /// Turn a directory of recordings into a feature CSV.
    Extract(ExtractArgs),
    /// Train a model on every patient except an optional held-out one.
    Train(TrainArgs),
    /// Warm-start a trained model on one seizure of a target patient.
    Finetune(FinetuneArgs),
    /// Score a model on non-overlapping windows and write a metric report.
    Evaluate(EvaluateArgs),
    /// Print a model's structure and parameter count.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 6)]
    pub patients: usize,
    #[arg(long, default_value_t = 9)]
    pub seizures_per: usize,
    /// Recording length per patient, seconds.
    #[arg(long, default_value_t = 600.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory holding `patient_<id>_signal.csv` and
    /// `patient_<id>_annotations.csv` pairs.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 250.0)]
    pub target_hz: f64,
    #[arg(long, default_value_t = 0.1)]
    pub band_low: f64,
    #[arg(long, default_value_t = 50.0)]
    pub band_high: f64,
    #[arg(long, default_value_t = 4)]
    pub band_order: usize,
    #[arg(long, default_value_t = 50.0)]
    pub notch: f64,
    /// Window length, seconds.
    #[arg(long, default_value_t = 2.0)]
    pub window: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 30)]
    pub rank: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub ridge: f64,
    #[arg(long, default_value_t = 0.6)]
    pub lengthscale: f64,
    /// Basis functions per feature.
    #[arg(long, default_value_t = 20)]
    pub basis: usize,
    /// Half-width of the feature-map interval.
    #[arg(long, default_value_t = 1.25)]
    pub half_width: f64,
    /// Full ALS passes over all factors.
    #[arg(long, default_value_t = 1)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub leave_out_patient: Option<u32>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub patient: u32,
    #[arg(long)]
    pub seizure_id: u32,
    /// Single-factor updates to run (default: one pass over the update dims).
    #[arg(long)]
    pub max_updates: Option<usize>,
    /// 1-based feature indices whose factors may change, e.g. `1,5,6`.
    #[arg(long, value_delimiter = ',')]
    pub update_dims: Option<Vec<usize>>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-update curve CSV (default: `<out>.curve.csv`).
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Restrict to one patient (default: every patient).
    #[arg(long)]
    pub patient: Option<u32>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
}
