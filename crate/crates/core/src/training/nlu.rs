use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Phase, TrainConfig};
use super::evaluate::retrieval_eval;
use super::run::{collect_grads, BatchResult, EvalRecord, Objective};
use crate::autodiff::{Graph, ParamSet};
use crate::retriever::{ranking_loss, RetrieverModel};
use crate::synthworld::{Dataset, Split, CAPTIONS_PER_IMAGE, EOS};
use crate::{Error, Result};

/// Retriever pretraining on ground-truth (image, caption) pairs of the
/// training split with the in-batch ranking hinge; validation score is the
/// mean rank of specific validation captions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NluObjective;

impl Objective for NluObjective {
    type Model = RetrieverModel;
    const PHASE: Phase = Phase::Nlu;
    const ABORT_ON_NONFINITE: bool = true;

    fn params(model: &RetrieverModel) -> &ParamSet {
        &model.params
    }

    fn params_mut(model: &mut RetrieverModel) -> &mut ParamSet {
        &mut model.params
    }

    fn items(&self, ds: &Dataset) -> Result<Vec<usize>> {
        Ok((0..ds.splits.train.len() * CAPTIONS_PER_IMAGE).collect())
    }

    fn batch(
        &mut self,
        model: &RetrieverModel,
        ds: &Dataset,
        batch: &[usize],
        _config: &TrainConfig,
        _rng: &mut ChaCha8Rng,
    ) -> Result<BatchResult> {
        let mut g = Graph::new();
        let vars = model.bind(&mut g, true)?;
        let (mut caps, mut imgs, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for &item in batch {
            let image = *ds
                .splits
                .train
                .get(item / CAPTIONS_PER_IMAGE)
                .ok_or(Error::UnknownImage(item))?;
            let mut tokens = ds.vocab.encode(&ds.captions_of(image)?[item % CAPTIONS_PER_IMAGE].words);
            tokens.push(EOS);
            caps.push(model.encode_caption_ids(&mut g, &vars, &tokens)?);
            imgs.push(model.encode_image(&mut g, &vars, &ds.grid(image)?.global)?);
            ids.push(image);
        }
        let loss = ranking_loss(&mut g, &caps, &imgs, &ids, model.config.margin)?;
        let value = g.scalar(loss);
        g.backward(loss)?;
        Ok(BatchResult {
            loss: value,
            grads: collect_grads(&g, &model.params, &RetrieverModel::named_vars(&vars)),
        })
    }

    fn evaluate(&mut self, model: &RetrieverModel, ds: &Dataset, iteration: u64) -> Result<EvalRecord> {
        let (mr, r1, r5) = retrieval_eval(model, ds, Split::Val)?;
        Ok(EvalRecord {
            iteration,
            score: mr,
            mean_rank: Some(mr),
            recall_at_1: Some(r1),
            recall_at_5: Some(r5),
            ..Default::default()
        })
    }
}
