use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Phase, TrainConfig};
use super::run::{collect_grads, BatchResult, EvalRecord, Objective};
use crate::autodiff::{Graph, ParamSet, Var};
use crate::captioner::{
    caption_targets, decode_step, xent_loss, CaptionerModel, CaptionerVars, DecoderState, ImageContext, TokenInput,
};
use crate::synthworld::{Dataset, RegionFeatureGrid, CAPTIONS_PER_IMAGE};
use crate::{Error, Result};

/// Summed cross-entropy of `ids` (plus EOS) under teacher forcing, and the
/// number of predicted tokens.
pub fn teacher_forced_xent(
    g: &mut Graph,
    model: &CaptionerModel,
    vars: &CaptionerVars,
    grid: &RegionFeatureGrid,
    ids: &[usize],
) -> Result<(Var, usize)> {
    let ctx = ImageContext::new(g, grid, vars)?;
    let (inputs, targets) = caption_targets(ids);
    if inputs.len() > model.config.max_len + 1 {
        return Err(Error::Config(alloc::format!(
            "caption of {} tokens exceeds max_len {}",
            ids.len(),
            model.config.max_len
        )));
    }
    let mut state = DecoderState::zeros(g, model.config.hidden_dim);
    let mut logits = Vec::with_capacity(inputs.len());
    for &x in &inputs {
        let (l, next) = decode_step(g, model, vars, &ctx, TokenInput::Id(x), state)?;
        logits.push(l);
        state = next;
    }
    Ok((xent_loss(g, &logits, &targets)?, targets.len()))
}

/// Teacher-forced cross-entropy over (image, reference caption) pairs of
/// the training split; validation score is per-token cross-entropy.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MleObjective;

fn pair(ds: &Dataset, item: usize) -> Result<(usize, Vec<usize>)> {
    let image = *ds
        .splits
        .train
        .get(item / CAPTIONS_PER_IMAGE)
        .ok_or(Error::UnknownImage(item))?;
    let cap = &ds.captions_of(image)?[item % CAPTIONS_PER_IMAGE];
    Ok((image, ds.vocab.encode(&cap.words)))
}

fn mean_xent(g: &mut Graph, model: &CaptionerModel, vars: &CaptionerVars, ds: &Dataset, pairs: &[(usize, Vec<usize>)]) -> Result<Var> {
    let mut terms = Vec::with_capacity(pairs.len());
    let mut tokens = 0;
    for (image, ids) in pairs {
        let (l, n) = teacher_forced_xent(g, model, vars, ds.grid(*image)?, ids)?;
        terms.push(l);
        tokens += n;
    }
    let all = g.concat(&terms)?;
    let total = g.sum(all);
    Ok(g.scale(total, 1.0 / tokens as f64))
}

impl Objective for MleObjective {
    type Model = CaptionerModel;
    const PHASE: Phase = Phase::Mle;
    const ABORT_ON_NONFINITE: bool = true;

    fn params(model: &CaptionerModel) -> &ParamSet {
        &model.params
    }

    fn params_mut(model: &mut CaptionerModel) -> &mut ParamSet {
        &mut model.params
    }

    fn items(&self, ds: &Dataset) -> Result<Vec<usize>> {
        Ok((0..ds.splits.train.len() * CAPTIONS_PER_IMAGE).collect())
    }

    fn batch(
        &mut self,
        model: &CaptionerModel,
        ds: &Dataset,
        batch: &[usize],
        _config: &TrainConfig,
        _rng: &mut ChaCha8Rng,
    ) -> Result<BatchResult> {
        let pairs = batch.iter().map(|&i| pair(ds, i)).collect::<Result<Vec<_>>>()?;
        let mut g = Graph::new();
        let vars = model.bind(&mut g, |_| true)?;
        let loss = mean_xent(&mut g, model, &vars, ds, &pairs)?;
        let value = g.scalar(loss);
        g.backward(loss)?;
        Ok(BatchResult {
            loss: value,
            grads: collect_grads(&g, &model.params, &CaptionerModel::named_vars(&vars)),
        })
    }

    fn evaluate(&mut self, model: &CaptionerModel, ds: &Dataset, iteration: u64) -> Result<EvalRecord> {
        let mut pairs = Vec::new();
        for &image in &ds.splits.val {
            for c in ds.captions_of(image)? {
                pairs.push((image, ds.vocab.encode(&c.words)));
            }
        }
        if pairs.is_empty() {
            return Err(Error::Empty("validation split"));
        }
        let (mut total, mut tokens) = (0.0, 0usize);
        for chunk in pairs.chunks(16) {
            let mut g = Graph::new();
            let vars = model.bind(&mut g, |_| false)?;
            for (image, ids) in chunk {
                let (l, n) = teacher_forced_xent(&mut g, model, &vars, ds.grid(*image)?, ids)?;
                total += g.scalar(l);
                tokens += n;
            }
        }
        let x = total / tokens as f64;
        Ok(EvalRecord {
            iteration,
            score: x,
            xent: Some(x),
            ..Default::default()
        })
    }
}
