use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use super::decoder::{decode_step, DecoderState, ImageContext, TokenInput};
use super::model::{CaptionerModel, CaptionerVars};
use crate::autodiff::{Graph, Tensor, Var};
use crate::math;
use crate::synthworld::{BOS, EOS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Greedy,
    #[default]
    Sample,
    GumbelSt,
}

/// A generated caption.
#[derive(Debug, Clone)]
pub struct Generated {
    /// Token ids without the terminating EOS.
    pub ids: Vec<usize>,
    /// Graph-attached one-hot rows, including the EOS row when one was
    /// emitted. Empty in greedy mode.
    pub one_hot: Vec<Var>,
    pub ended: bool,
}

/// Forward value is the hard one-hot sample; the backward pass treats the
/// sampling step as identity and hands the gradient to `probs`.
pub fn straight_through(g: &mut Graph, probs: Var, sampled_onehot: Tensor) -> Result<Var> {
    g.straight_through(probs, sampled_onehot)
}

fn draw<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; take the last non-zero entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Decodes from BOS until EOS or `max_len` tokens.
pub fn generate<R: Rng>(
    g: &mut Graph,
    model: &CaptionerModel,
    vars: &CaptionerVars,
    ctx: &ImageContext,
    mode: SampleMode,
    temperature: f64,
    rng: &mut R,
    max_len: usize,
) -> Result<Generated> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Config(alloc::format!("temperature {temperature} must be > 0")));
    }
    let v = model.vocab_size;
    let mut state = DecoderState::zeros(g, model.config.hidden_dim);
    let mut prev = TokenInput::Id(BOS);
    let mut out = Generated {
        ids: Vec::new(),
        one_hot: Vec::new(),
        ended: false,
    };
    let gumbel = Gumbel::new(0.0, 1.0).expect("valid gumbel");
    while out.ids.len() < max_len {
        let (logits, next) = decode_step(g, model, vars, ctx, prev, state)?;
        state = next;
        let token = match mode {
            SampleMode::Greedy => {
                let tok = math::argmax(g.data(logits));
                prev = TokenInput::Id(tok);
                tok
            }
            SampleMode::Sample => {
                let scaled = g.scale(logits, 1.0 / temperature);
                let probs = g.softmax(scaled)?;
                let tok = draw(g.data(probs), rng);
                let st = g.straight_through(probs, Tensor::one_hot(v, tok))?;
                out.one_hot.push(st);
                prev = TokenInput::OneHot(st);
                tok
            }
            SampleMode::GumbelSt => {
                let noise: Vec<f64> = (0..v).map(|_| gumbel.sample(rng)).collect();
                let noise = g.constant(Tensor::vector(noise));
                let perturbed = g.add(logits, noise)?;
                let tok = math::argmax(g.data(perturbed));
                let scaled = g.scale(perturbed, 1.0 / temperature);
                let probs = g.softmax(scaled)?;
                let st = g.straight_through(probs, Tensor::one_hot(v, tok))?;
                out.one_hot.push(st);
                prev = TokenInput::OneHot(st);
                tok
            }
        };
        if token == EOS {
            out.ended = true;
            break;
        }
        out.ids.push(token);
    }
    Ok(out)
}

/// Drops every token equal to the one immediately before it.
pub fn dedup_consecutive(ids: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(ids.len());
    for &t in ids {
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dedup_examples() {
        let (a, cat, sat) = (4, 5, 6);
        assert_eq!(dedup_consecutive(&[a, a, cat, cat, sat]), vec![a, cat, sat]);
        assert_eq!(dedup_consecutive(&[]), Vec::<usize>::new());
        assert_eq!(dedup_consecutive(&[a, 7, a]), vec![a, 7, a]);
    }

    #[test]
    fn draw_covers_support() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let p = [0.0, 0.25, 0.75, 0.0];
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            counts[draw(&p, &mut rng)] += 1;
        }
        assert_eq!(counts[0] + counts[3], 0);
        assert!((counts[1] as f64 / 4000.0 - 0.25).abs() < 0.03);
    }
}
