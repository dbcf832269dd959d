use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::{Error, Result};

/// Similarity loss used during specificity fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Dp,
    Cos,
    Cdp,
    Ccos,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Dp, LossKind::Cos, LossKind::Cdp, LossKind::Ccos];

    pub fn is_contrastive(self) -> bool {
        matches!(self, LossKind::Cdp | LossKind::Ccos)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Dp => "dp",
            LossKind::Cos => "cos",
            LossKind::Cdp => "cdp",
            LossKind::Ccos => "ccos",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown loss kind {s:?}")))
    }
}

/// Cosine similarity as a graph node. Zero-norm inputs are rejected.
pub fn cosine(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let dot = g.dot(a, b)?;
    let na = g.norm(a);
    let nb = g.norm(b);
    if g.scalar(na) == 0.0 || g.scalar(nb) == 0.0 {
        return Err(Error::DegenerateEmbedding("cosine of a zero-norm embedding"));
    }
    let denom = g.mul(na, nb)?;
    g.div(dot, denom)
}

/// `−c·i_o`
pub fn loss_dp(g: &mut Graph, c: Var, io: Var) -> Result<Var> {
    let d = g.dot(c, io)?;
    Ok(g.neg(d))
}

/// `−cos(c, i_o)`
pub fn loss_cos(g: &mut Graph, c: Var, io: Var) -> Result<Var> {
    let s = cosine(g, c, io)?;
    Ok(g.neg(s))
}

/// `max(0, c·i_c − c·i_o)`
pub fn loss_cdp(g: &mut Graph, c: Var, io: Var, ic: Var) -> Result<Var> {
    let pos = g.dot(c, io)?;
    let neg = g.dot(c, ic)?;
    let d = g.sub(neg, pos)?;
    Ok(g.relu(d))
}

/// `max(0, cos(c, i_c) − cos(c, i_o))`
pub fn loss_ccos(g: &mut Graph, c: Var, io: Var, ic: Var) -> Result<Var> {
    let pos = cosine(g, c, io)?;
    let neg = cosine(g, c, ic)?;
    let d = g.sub(neg, pos)?;
    Ok(g.relu(d))
}

/// Dispatches on `kind`; contrastive kinds require `ic`.
pub fn specificity_loss(g: &mut Graph, kind: LossKind, c: Var, io: Var, ic: Option<Var>) -> Result<Var> {
    let need = || Error::Config(alloc::format!("{kind} loss needs a contrastive image"));
    match kind {
        LossKind::Dp => loss_dp(g, c, io),
        LossKind::Cos => loss_cos(g, c, io),
        LossKind::Cdp => loss_cdp(g, c, io, ic.ok_or_else(need)?),
        LossKind::Ccos => loss_ccos(g, c, io, ic.ok_or_else(need)?),
    }
}

/// Bidirectional max-margin hinge over in-batch negatives on cosine
/// similarity, averaged over every hinge term of both directions. Pairs
/// that share an image are not used as negatives of each other.
pub fn ranking_loss(g: &mut Graph, captions: &[Var], images: &[Var], image_ids: &[usize], margin: f64) -> Result<Var> {
    let b = captions.len();
    if b == 0 || images.len() != b || image_ids.len() != b {
        return Err(Error::Config(alloc::format!(
            "ranking loss needs matching non-empty batches, got {b} captions, {} images, {} ids",
            images.len(),
            image_ids.len()
        )));
    }
    let unit = |g: &mut Graph, v: Var, what: &'static str| -> Result<Var> {
        let n = g.norm(v);
        if g.scalar(n) == 0.0 {
            return Err(Error::DegenerateEmbedding(what));
        }
        g.div(v, n)
    };
    let cs = captions
        .iter()
        .map(|&c| unit(g, c, "caption"))
        .collect::<Result<Vec<_>>>()?;
    let is = images
        .iter()
        .map(|&i| unit(g, i, "image"))
        .collect::<Result<Vec<_>>>()?;
    let mut sim = Vec::with_capacity(b * b);
    for &c in &cs {
        for &i in &is {
            sim.push(g.dot(c, i)?);
        }
    }
    let mut terms = Vec::new();
    for p in 0..b {
        let pos = sim[p * b + p];
        let shifted = g.scale(pos, -1.0);
        for q in (0..b).filter(|&q| image_ids[q] != image_ids[p]) {
            for neg in [sim[p * b + q], sim[q * b + p]] {
                let d = g.add(neg, shifted)?;
                let m = g.constant(crate::autodiff::Tensor::scalar(margin));
                let h = g.add(d, m)?;
                terms.push(g.relu(h));
            }
        }
    }
    if terms.is_empty() {
        return Err(Error::Empty("ranking loss needs at least two distinct images in the batch"));
    }
    let all = g.concat(&terms)?;
    Ok(g.mean(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn v(g: &mut Graph, x: &[f64]) -> Var {
        g.param(Tensor::vector(x.to_vec()))
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn dp_examples() {
        let mut g = Graph::new();
        let (c, i) = (v(&mut g, &[1.0, 2.0]), v(&mut g, &[3.0, 4.0]));
        let l = loss_dp(&mut g, c, i).unwrap();
        assert!(close(g.scalar(l), -11.0));
        let (c, i) = (v(&mut g, &[0.0, 0.0]), v(&mut g, &[3.0, 4.0]));
        let l = loss_dp(&mut g, c, i).unwrap();
        assert_eq!(g.scalar(l), 0.0);
    }

    #[test]
    fn cos_examples() {
        let mut g = Graph::new();
        let (c, i) = (v(&mut g, &[1.0, 0.0]), v(&mut g, &[1.0, 1.0]));
        let l = loss_cos(&mut g, c, i).unwrap();
        assert!((g.scalar(l) + 0.70711).abs() < 1e-5);
        let l = loss_cos(&mut g, i, i).unwrap();
        assert!(close(g.scalar(l), -1.0));
        let z = v(&mut g, &[0.0, 0.0]);
        assert!(matches!(loss_cos(&mut g, z, i), Err(Error::DegenerateEmbedding(_))));
    }

    #[test]
    fn contrastive_examples() {
        let mut g = Graph::new();
        let c = v(&mut g, &[1.0, 0.0]);
        let io = v(&mut g, &[1.0, 0.0]);
        let ic = v(&mut g, &[2.0, 0.0]);
        let l = loss_cdp(&mut g, c, io, ic).unwrap();
        assert!(close(g.scalar(l), 1.0));
        let io = v(&mut g, &[0.0, 1.0]);
        let ic = v(&mut g, &[1.0, 0.0]);
        let l = loss_ccos(&mut g, c, io, ic).unwrap();
        assert!(close(g.scalar(l), 1.0));
        let l = loss_ccos(&mut g, c, io, io).unwrap();
        assert_eq!(g.scalar(l), 0.0);
    }

    #[test]
    fn dispatch_requires_contrast() {
        let mut g = Graph::new();
        let c = v(&mut g, &[1.0, 0.0]);
        assert!(specificity_loss(&mut g, LossKind::Cdp, c, c, None).is_err());
        assert!(specificity_loss(&mut g, LossKind::Dp, c, c, None).is_ok());
        assert_eq!("ccos".parse::<LossKind>().unwrap(), LossKind::Ccos);
        assert!("x".parse::<LossKind>().is_err());
    }

    #[test]
    fn ranking_loss_zero_when_aligned_and_separated() {
        let mut g = Graph::new();
        let a = v(&mut g, &[1.0, 0.0]);
        let b = v(&mut g, &[0.0, 1.0]);
        let l = ranking_loss(&mut g, &[a, b], &[a, b], &[0, 1], 0.2).unwrap();
        assert_eq!(g.scalar(l), 0.0);
        // swapped pairs: every term is margin + 1
        let l = ranking_loss(&mut g, &[a, b], &[b, a], &[0, 1], 0.2).unwrap();
        assert!(close(g.scalar(l), 1.2));
        let l = ranking_loss(&mut g, &[a, b], &[a, b], &[0, 0], 0.2);
        assert!(l.is_err());
        assert!(ranking_loss(&mut g, &[a], &[a, b], &[0], 0.2).is_err());
    }
}
