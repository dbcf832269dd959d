//! Training loops for the three phases (captioner MLE, retriever
//! pretraining, specificity fine-tuning), evaluation, and run logs.
//!
//! Every phase runs through [`RunState`], which owns the model, optimizer
//! state, RNG, batch sampler, log and best-model snapshot. The whole state
//! serializes, so a paused run continues bit-identically after a reload.

mod config;
mod evaluate;
mod finetune;
mod mle;
mod nlu;
mod pipeline;
mod run;
mod sampler;

pub use config::{ExperimentConfig, Phase, TrainConfig, PRESETS};
pub use evaluate::{evaluate_model, greedy_captions, retrieval_eval, retrieval_ranks, Evaluation, GeneratedCaption};
pub use finetune::FinetuneObjective;
pub use mle::{teacher_forced_xent, MleObjective};
pub use nlu::NluObjective;
pub use pipeline::{finetune_run, init_seed, mle_run, nlu_run};
pub use run::{
    BatchResult, BestModel, EvalRecord, LogRow, Objective, RunControl, RunEvent, RunLog, RunState, RunStatus,
    StopReason,
};
pub use sampler::BatchSampler;
