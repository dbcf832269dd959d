use super::config::{ExperimentConfig, Phase};
use super::finetune::FinetuneObjective;
use super::mle::MleObjective;
use super::nlu::NluObjective;
use super::run::RunState;
use crate::captioner::CaptionerModel;
use crate::retriever::{LossKind, RetrieverModel};
use crate::synthworld::{derive_seed, Dataset};
use crate::Result;

const INIT_STREAM: u64 = 0x696e_6974;

/// Parameter-initialization seed of a phase's model.
pub fn init_seed(seed: u64, phase: Phase) -> u64 {
    derive_seed(seed, INIT_STREAM, phase as u64)
}

/// A fresh MLE run over a newly initialized captioner.
pub fn mle_run(cfg: &ExperimentConfig, ds: &Dataset) -> Result<RunState<MleObjective>> {
    let model = CaptionerModel::new(
        cfg.captioner.clone(),
        ds.vocab.len(),
        cfg.world.feat_dim,
        init_seed(cfg.seed, Phase::Mle),
    )?;
    RunState::new(cfg.mle.clone(), MleObjective, model, ds)
}

/// A fresh retriever pretraining run.
pub fn nlu_run(cfg: &ExperimentConfig, ds: &Dataset) -> Result<RunState<NluObjective>> {
    let model = RetrieverModel::new(
        cfg.retriever.clone(),
        ds.vocab.len(),
        cfg.world.feat_dim,
        init_seed(cfg.seed, Phase::Nlu),
    )?;
    RunState::new(cfg.nlu.clone(), NluObjective, model, ds)
}

/// A fine-tuning run of `baseline` against the frozen `retriever`.
pub fn finetune_run(
    cfg: &ExperimentConfig,
    kind: LossKind,
    baseline: CaptionerModel,
    retriever: RetrieverModel,
    ds: &Dataset,
) -> Result<RunState<FinetuneObjective>> {
    let mut tc = cfg.finetune.clone();
    tc.loss_kind = kind;
    let objective = FinetuneObjective::new(kind, retriever, ds)?;
    RunState::new(tc, objective, baseline, ds)
}
