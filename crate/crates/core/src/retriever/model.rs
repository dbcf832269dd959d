use alloc::format;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rank::{cosine_similarity, rank_by_similarity};
use crate::autodiff::{lstm_cell, Graph, LstmVars, ParamSet, Tensor, Var};
use crate::synthworld::EOS;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrieverConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub joint_dim: usize,
    pub margin: f64,
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 64,
            joint_dim: 48,
            margin: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieverModel {
    pub config: RetrieverConfig,
    pub vocab_size: usize,
    pub feat_dim: usize,
    pub params: ParamSet,
}

#[derive(Debug, Clone, Copy)]
pub struct RetrieverVars {
    pub embed: Var,
    pub lstm: LstmVars,
    pub cap_w: Var,
    pub cap_b: Var,
    pub img_w: Var,
    pub img_b: Var,
}

impl RetrieverVars {
    fn assemble(get: &mut impl FnMut(&str) -> Result<Var>) -> Result<Self> {
        Ok(Self {
            embed: get("embed")?,
            lstm: LstmVars {
                w: get("enc_lstm.w")?,
                b: get("enc_lstm.b")?,
            },
            cap_w: get("cap_proj.w")?,
            cap_b: get("cap_proj.b")?,
            img_w: get("img_proj.w")?,
            img_b: get("img_proj.b")?,
        })
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

impl RetrieverModel {
    pub fn new(config: RetrieverConfig, vocab_size: usize, feat_dim: usize, seed: u64) -> Result<Self> {
        if config.embed_dim == 0 || config.hidden_dim == 0 || config.joint_dim == 0 {
            return Err(Error::Config(format!("retriever dimensions must be positive: {config:?}")));
        }
        let (e, h, j, v, f) = (config.embed_dim, config.hidden_dim, config.joint_dim, vocab_size, feat_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        p.insert("embed", Tensor::matrix(v, e, uniform(&mut rng, v * e, 0.1))?);
        p.insert("enc_lstm.w", Tensor::matrix(e + h, 4 * h, uniform(&mut rng, (e + h) * 4 * h, 0.08))?);
        let mut b = alloc::vec![0.0; 4 * h];
        b[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
        p.insert("enc_lstm.b", Tensor::vector(b));
        let s = 1.0 / crate::math::sqrt(h as f64);
        p.insert("cap_proj.w", Tensor::matrix(h, j, uniform(&mut rng, h * j, s))?);
        p.insert("cap_proj.b", Tensor::vector(alloc::vec![0.0; j]));
        let s = 1.0 / crate::math::sqrt(f as f64);
        p.insert("img_proj.w", Tensor::matrix(f, j, uniform(&mut rng, f * j, s))?);
        p.insert("img_proj.b", Tensor::vector(alloc::vec![0.0; j]));
        Ok(Self {
            config,
            vocab_size,
            feat_dim,
            params: p,
        })
    }

    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Result<RetrieverVars> {
        let mut get = |name: &str| -> Result<Var> { Ok(g.leaf(self.params.get(name)?.clone(), trainable)) };
        RetrieverVars::assemble(&mut get)
    }

    /// Handles for a parameter set already bound with [`ParamSet::bind`].
    pub fn vars_from(params: &ParamSet, bound: &[Var]) -> Result<RetrieverVars> {
        RetrieverVars::assemble(&mut |name: &str| params.bound_var(bound, name))
    }

    pub fn named_vars(vars: &RetrieverVars) -> [(&'static str, Var); 7] {
        [
            ("embed", vars.embed),
            ("enc_lstm.w", vars.lstm.w),
            ("enc_lstm.b", vars.lstm.b),
            ("cap_proj.w", vars.cap_w),
            ("cap_proj.b", vars.cap_b),
            ("img_proj.w", vars.img_w),
            ("img_proj.b", vars.img_b),
        ]
    }

    fn encode_embeddings(&self, g: &mut Graph, vars: &RetrieverVars, embs: &[Var]) -> Result<Var> {
        if embs.is_empty() {
            return Err(Error::Empty("caption tokens"));
        }
        let zeros = Tensor::zeros(&[self.config.hidden_dim]);
        let mut h = g.constant(zeros.clone());
        let mut c = g.constant(zeros);
        for &x in embs {
            (h, c) = lstm_cell(g, x, h, c, &vars.lstm)?;
        }
        let out = g.matmul(h, vars.cap_w)?;
        g.add(out, vars.cap_b)
    }

    /// Caption embedding from `[V]` one-hot rows; differentiable with
    /// respect to the rows themselves.
    pub fn encode_caption(&self, g: &mut Graph, vars: &RetrieverVars, one_hots: &[Var]) -> Result<Var> {
        let embs = one_hots
            .iter()
            .map(|&o| g.matmul(o, vars.embed))
            .collect::<Result<Vec<_>>>()?;
        self.encode_embeddings(g, vars, &embs)
    }

    /// Same value as [`encode_caption`](Self::encode_caption) on the one-hot
    /// rows of `ids`, using row lookups.
    pub fn encode_caption_ids(&self, g: &mut Graph, vars: &RetrieverVars, ids: &[usize]) -> Result<Var> {
        let embs = ids
            .iter()
            .map(|&i| g.row(vars.embed, i))
            .collect::<Result<Vec<_>>>()?;
        self.encode_embeddings(g, vars, &embs)
    }

    /// `i = global·W + b`.
    pub fn encode_image(&self, g: &mut Graph, vars: &RetrieverVars, global: &[f64]) -> Result<Var> {
        let x = g.constant(Tensor::vector(global.to_vec()));
        let out = g.matmul(x, vars.img_w)?;
        g.add(out, vars.img_b)
    }

    /// Image embedding computed outside any graph.
    pub fn image_embedding(&self, global: &[f64]) -> Result<Vec<f64>> {
        let w = self.params.get("img_proj.w")?;
        let b = self.params.get("img_proj.b")?;
        let (f, j) = w.dims2();
        if global.len() != f {
            return Err(Error::Shape {
                op: "image_embedding",
                lhs: alloc::vec![global.len()],
                rhs: w.shape().to_vec(),
            });
        }
        let mut out = b.data().to_vec();
        for (p, &x) in global.iter().enumerate() {
            for (o, &wv) in out.iter_mut().zip(&w.data()[p * j..(p + 1) * j]) {
                *o += x * wv;
            }
        }
        Ok(out)
    }

    /// Caption embedding of `ids` followed by EOS, outside any graph.
    pub fn caption_embedding(&self, ids: &[usize]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let vars = self.bind(&mut g, false)?;
        let mut with_eos = ids.to_vec();
        with_eos.push(EOS);
        let c = self.encode_caption_ids(&mut g, &vars, &with_eos)?;
        Ok(g.data(c).to_vec())
    }

    /// 1-based rank of `target` among `pool` (image id, embedding) by cosine
    /// similarity to the caption `ids`; ties go to the lower image id.
    pub fn retrieve_rank(&self, ids: &[usize], target: usize, pool: &[(usize, Vec<f64>)]) -> Result<usize> {
        let c = self.caption_embedding(ids)?;
        let sims = pool
            .iter()
            .map(|(id, e)| cosine_similarity(&c, e).map(|s| (*id, s)))
            .collect::<Result<Vec<_>>>()?;
        rank_by_similarity(&sims, target)
    }
}
