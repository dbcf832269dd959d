use alloc::vec::Vec;

use super::model::{CaptionerModel, CaptionerVars};
use crate::autodiff::{lstm_cell, Graph, Tensor, Var};
use crate::synthworld::RegionFeatureGrid;
use crate::{Error, Result};

/// Per-image constants plus the region half of the attention scores,
/// computed once per caption.
#[derive(Debug, Clone)]
pub struct ImageContext {
    pub global: Var,
    /// `[K, d_feat]`.
    pub regions: Var,
    pub region_proj: Vec<Var>,
}

impl ImageContext {
    pub fn new(g: &mut Graph, grid: &RegionFeatureGrid, vars: &CaptionerVars) -> Result<Self> {
        let k = grid.num_regions();
        if k == 0 {
            return Err(Error::Empty("region grid"));
        }
        let d = grid.feat_dim();
        let flat: Vec<f64> = grid.regions.iter().flatten().copied().collect();
        let regions = g.constant(Tensor::matrix(k, d, flat)?);
        let global = g.constant(Tensor::vector(grid.global.clone()));
        let proj = g.matmul(regions, vars.att_region)?;
        let region_proj = (0..k).map(|i| g.row(proj, i)).collect::<Result<_>>()?;
        Ok(Self {
            global,
            regions,
            region_proj,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecoderState {
    pub h_att: Var,
    pub c_att: Var,
    pub h_lang: Var,
    pub c_lang: Var,
    pub t: usize,
}

impl DecoderState {
    pub fn zeros(g: &mut Graph, hidden: usize) -> Self {
        let mut z = || g.constant(Tensor::zeros(&[hidden]));
        Self {
            h_att: z(),
            c_att: z(),
            h_lang: z(),
            c_lang: z(),
            t: 0,
        }
    }
}

/// Previous token fed to the decoder.
#[derive(Debug, Clone, Copy)]
pub enum TokenInput {
    /// Embedding row lookup (teacher forcing, greedy decoding).
    Id(usize),
    /// `[V]` one-hot vector multiplied into the embedding table, so the
    /// gradient reaches the vector itself.
    OneHot(Var),
}

/// `Σ_k weights_k · region_k`.
pub fn pool_regions(g: &mut Graph, weights: Var, regions: Var) -> Result<Var> {
    g.matmul(weights, regions)
}

/// Additive attention: `score_k = wᵀ tanh(W_r·region_k + W_h·hidden)`.
/// Returns the attended feature and the softmax weights.
pub fn attend(
    g: &mut Graph,
    ctx: &ImageContext,
    att_hidden: Var,
    vars: &CaptionerVars,
) -> Result<(Var, Var)> {
    let hp = g.matmul(att_hidden, vars.att_hidden)?;
    let mut scores = Vec::with_capacity(ctx.region_proj.len());
    for &rp in &ctx.region_proj {
        let s = g.add(rp, hp)?;
        let s = g.tanh(s);
        scores.push(g.dot(s, vars.att_score)?);
    }
    let scores = g.concat(&scores)?;
    let weights = g.softmax(scores)?;
    let attended = pool_regions(g, weights, ctx.regions)?;
    Ok((attended, weights))
}

/// One decoder step: returns the `[V]` logits and the advanced state.
pub fn decode_step(
    g: &mut Graph,
    model: &CaptionerModel,
    vars: &CaptionerVars,
    ctx: &ImageContext,
    prev: TokenInput,
    state: DecoderState,
) -> Result<(Var, DecoderState)> {
    if state.t >= model.config.max_len + 1 {
        return Err(Error::Config(alloc::format!(
            "decode step {} beyond max_len {}",
            state.t,
            model.config.max_len
        )));
    }
    let emb = match prev {
        TokenInput::Id(id) => {
            if id >= model.vocab_size {
                return Err(Error::UnknownToken {
                    id,
                    vocab: model.vocab_size,
                });
            }
            g.row(vars.embed, id)?
        }
        TokenInput::OneHot(v) => g.matmul(v, vars.embed)?,
    };
    let x_att = g.concat(&[ctx.global, emb, state.h_lang])?;
    let (h_att, c_att) = lstm_cell(g, x_att, state.h_att, state.c_att, &vars.att_lstm)?;
    let (attended, _) = attend(g, ctx, h_att, vars)?;
    let x_lang = g.concat(&[attended, h_att])?;
    let (h_lang, c_lang) = lstm_cell(g, x_lang, state.h_lang, state.c_lang, &vars.lang_lstm)?;
    let logits = g.matmul(h_lang, vars.out_w)?;
    let logits = g.add(logits, vars.out_b)?;
    Ok((
        logits,
        DecoderState {
            h_att,
            c_att,
            h_lang,
            c_lang,
            t: state.t + 1,
        },
    ))
}
