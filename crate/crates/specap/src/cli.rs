use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use specap_core::retriever::LossKind;
use specap_core::synthworld::Split;
use specap_core::training::Phase;
use specap_core::verify::Suite;

/// Default output root when `SPECAP_RUN_ROOT` is unset.
pub const DEFAULT_RUN_ROOT: &str = "runs";
pub const RUN_ROOT_ENV: &str = "SPECAP_RUN_ROOT";

pub fn run_root() -> PathBuf {
    std::env::var_os(RUN_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_RUN_ROOT))
}

/// Specificity-optimized caption generation on a synthetic world.
///
/// Exit codes: 0 success, 1 usage, 2 missing or mismatched inputs,
/// 3 runtime failure (divergence, freeze violation, failed verification).
#[derive(Debug, Parser)]
#[command(name = "specap", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
    /// Run one training phase.
    Train(TrainArgs),
    /// Evaluate a captioner on a split.
    Evaluate(EvaluateArgs),
    /// Run the oracle verification suites.
    Verify(VerifyArgs),
    /// Compare two report.json files.
    ReportDiff(ReportDiffArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: $SPECAP_RUN_ROOT/data-seed<seed>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow writing into a non-empty directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub phase: Phase,
    #[arg(long)]
    pub config: PathBuf,
    /// Dataset directory written by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    /// Run directory [default: $SPECAP_RUN_ROOT/<phase>[-<loss>]-seed<seed>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fine-tuning loss; overrides the config.
    #[arg(long)]
    pub loss: Option<LossKind>,
    /// Pretrained captioner checkpoint or MLE run directory (finetune).
    #[arg(long)]
    pub captioner: Option<PathBuf>,
    /// Pretrained retriever checkpoint or NLU run directory (finetune).
    #[arg(long)]
    pub retriever: Option<PathBuf>,
    /// Continue from the run directory's ckpt-last.
    #[arg(long, conflicts_with = "force")]
    pub resume: bool,
    /// Start over in a non-empty run directory.
    #[arg(long)]
    pub force: bool,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Save and stop after this many updates; resume later with --resume.
    #[arg(long)]
    pub pause_after: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Captioner checkpoint or run directory.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Retriever checkpoint or NLU run directory.
    #[arg(long)]
    pub retriever: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Output directory [default: $SPECAP_RUN_ROOT/eval-<run>-<split>].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only this suite.
    #[arg(long)]
    pub suite: Option<Suite>,
}

#[derive(Debug, Args)]
pub struct ReportDiffArgs {
    pub base: PathBuf,
    pub other: PathBuf,
}
