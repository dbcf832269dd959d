use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Phase, TrainConfig};
use super::evaluate::{greedy_captions, retrieval_ranks};
use super::run::{collect_grads, BatchResult, EvalRecord, Objective};
use crate::autodiff::{Graph, ParamSet, Tensor};
use crate::captioner::{generate, CaptionerModel, ImageContext};
use crate::metrics::{avg_caption_length, diversity_pct, mean_rank, novelty_pct, recall_at_k};
use crate::retriever::{
    build_neighbor_table, select_contrastive, specificity_loss, LossKind, NeighborTable, RetrieverModel,
};
use crate::synthworld::Dataset;
use crate::{Error, Result};

/// Specificity fine-tuning: sampled captions are scored by the frozen
/// retriever and the loss flows back through the straight-through samples
/// into the captioner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinetuneObjective {
    pub loss_kind: LossKind,
    pub retriever: RetrieverModel,
    pub retriever_fingerprint: String,
    /// Present only for the contrastive losses.
    pub neighbors: Option<NeighborTable>,
    /// Every `(original, contrastive)` image pair drawn so far.
    pub contrastive_draws: Vec<(usize, usize)>,
    #[serde(skip)]
    image_cache: BTreeMap<usize, Vec<f64>>,
}

impl FinetuneObjective {
    pub fn new(loss_kind: LossKind, retriever: RetrieverModel, ds: &Dataset) -> Result<Self> {
        let neighbors = if loss_kind.is_contrastive() {
            let grids = ds
                .splits
                .train
                .iter()
                .map(|&i| ds.grid(i))
                .collect::<Result<Vec<_>>>()?;
            Some(build_neighbor_table(&grids)?)
        } else {
            None
        };
        Ok(Self {
            loss_kind,
            retriever_fingerprint: retriever.params.fingerprint(),
            retriever,
            neighbors,
            contrastive_draws: Vec::new(),
            image_cache: BTreeMap::new(),
        })
    }

    /// Unit-length projected embedding of an image.
    fn image_embedding(&mut self, ds: &Dataset, image: usize) -> Result<Vec<f64>> {
        if let Some(e) = self.image_cache.get(&image) {
            return Ok(e.clone());
        }
        let mut e = self.retriever.image_embedding(&ds.grid(image)?.global)?;
        let n = crate::math::sqrt(e.iter().map(|x| x * x).sum());
        if n == 0.0 {
            return Err(Error::DegenerateEmbedding("image"));
        }
        for x in &mut e {
            *x /= n;
        }
        self.image_cache.insert(image, e.clone());
        Ok(e)
    }
}

impl Objective for FinetuneObjective {
    type Model = CaptionerModel;
    const PHASE: Phase = Phase::Finetune;
    const ABORT_ON_NONFINITE: bool = false;

    fn params(model: &CaptionerModel) -> &ParamSet {
        &model.params
    }

    fn params_mut(model: &mut CaptionerModel) -> &mut ParamSet {
        &mut model.params
    }

    fn items(&self, ds: &Dataset) -> Result<Vec<usize>> {
        Ok(ds.splits.train.clone())
    }

    fn batch(
        &mut self,
        model: &CaptionerModel,
        ds: &Dataset,
        batch: &[usize],
        config: &TrainConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<BatchResult> {
        if config.loss_kind != self.loss_kind {
            return Err(Error::Config(alloc::format!(
                "run was set up for {} but the config asks for {}",
                self.loss_kind,
                config.loss_kind
            )));
        }
        let mut g = Graph::new();
        let vars = model.bind(&mut g, |n| config.trainable.includes(n))?;
        let rvars = self.retriever.bind(&mut g, false)?;
        let mut terms = Vec::with_capacity(batch.len());
        for &image in batch {
            let ctx = ImageContext::new(&mut g, ds.grid(image)?, &vars)?;
            let gen = generate(
                &mut g,
                model,
                &vars,
                &ctx,
                config.sample_mode,
                config.temperature,
                rng,
                model.config.max_len,
            )?;
            let c = self.retriever.encode_caption(&mut g, &rvars, &gen.one_hot)?;
            let io = self.image_embedding(ds, image)?;
            let io = g.constant(Tensor::vector(io));
            let ic = match &self.neighbors {
                Some(table) => {
                    let other = select_contrastive(image, table, rng)?;
                    self.contrastive_draws.push((image, other));
                    let e = self.image_embedding(ds, other)?;
                    Some(g.constant(Tensor::vector(e)))
                }
                None => None,
            };
            terms.push(specificity_loss(&mut g, self.loss_kind, c, io, ic)?);
        }
        let all = g.concat(&terms)?;
        let loss = g.mean(all);
        let value = g.scalar(loss);
        g.backward(loss)?;
        Ok(BatchResult {
            loss: value,
            grads: collect_grads(&g, &model.params, &CaptionerModel::named_vars(&vars)),
        })
    }

    fn evaluate(&mut self, model: &CaptionerModel, ds: &Dataset, iteration: u64) -> Result<EvalRecord> {
        let val = &ds.splits.val;
        let caps = greedy_captions(model, ds, val)?;
        let pairs: Vec<(usize, Vec<usize>)> = caps.iter().map(|c| (c.image_id, c.ids.clone())).collect();
        let ranks = retrieval_ranks(&self.retriever, ds, &pairs, val)?;
        let texts: Vec<&str> = caps.iter().map(|c| c.text.as_str()).collect();
        let mr = mean_rank(&ranks)?;
        Ok(EvalRecord {
            iteration,
            score: mr,
            mean_rank: Some(mr),
            recall_at_1: Some(recall_at_k(&ranks, 1)?),
            recall_at_5: Some(recall_at_k(&ranks, 5)?),
            diversity: Some(diversity_pct(&texts)?),
            novelty: Some(novelty_pct(&texts, &ds.training_caption_set())?),
            avg_length: Some(avg_caption_length(&texts)?),
            ..Default::default()
        })
    }

    fn check_invariants(&self) -> Result<()> {
        if self.retriever.params.fingerprint() != self.retriever_fingerprint {
            return Err(Error::FreezeViolation);
        }
        Ok(())
    }
}
