use alloc::format;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, LstmVars, ParamSet, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptionerConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub att_dim: usize,
    pub max_len: usize,
}

impl Default for CaptionerConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 48,
            att_dim: 32,
            max_len: 20,
        }
    }
}

/// Which captioner parameters a fine-tuning run may update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainableSet {
    /// Both LSTMs plus embedding, attention and output projections.
    #[default]
    Full,
    /// Only the two LSTMs' weights and biases.
    LstmsOnly,
}

impl TrainableSet {
    pub fn includes(self, name: &str) -> bool {
        match self {
            TrainableSet::Full => true,
            TrainableSet::LstmsOnly => name.starts_with("att_lstm.") || name.starts_with("lang_lstm."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionerModel {
    pub config: CaptionerConfig,
    pub vocab_size: usize,
    pub feat_dim: usize,
    pub params: ParamSet,
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn lstm_params(rng: &mut ChaCha8Rng, d_in: usize, d_h: usize) -> (Tensor, Tensor) {
    let w = Tensor::matrix(d_in + d_h, 4 * d_h, uniform(rng, (d_in + d_h) * 4 * d_h, 0.08))
        .expect("shape");
    let mut b = alloc::vec![0.0; 4 * d_h];
    // forget gate starts open
    b[d_h..2 * d_h].iter_mut().for_each(|x| *x = 1.0);
    (w, Tensor::vector(b))
}

impl CaptionerModel {
    pub fn new(config: CaptionerConfig, vocab_size: usize, feat_dim: usize, seed: u64) -> Result<Self> {
        if config.embed_dim == 0 || config.hidden_dim == 0 || config.att_dim == 0 || config.max_len == 0 {
            return Err(Error::Config(format!("captioner dimensions must be positive: {config:?}")));
        }
        let (e, h, a, v, f) = (config.embed_dim, config.hidden_dim, config.att_dim, vocab_size, feat_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        p.insert("embed", Tensor::matrix(v, e, uniform(&mut rng, v * e, 0.1))?);
        let (w, b) = lstm_params(&mut rng, f + e + h, h);
        p.insert("att_lstm.w", w);
        p.insert("att_lstm.b", b);
        p.insert("att.region", Tensor::matrix(f, a, uniform(&mut rng, f * a, 0.1))?);
        p.insert("att.hidden", Tensor::matrix(h, a, uniform(&mut rng, h * a, 0.1))?);
        p.insert("att.score", Tensor::vector(uniform(&mut rng, a, 0.1)));
        let (w, b) = lstm_params(&mut rng, f + h, h);
        p.insert("lang_lstm.w", w);
        p.insert("lang_lstm.b", b);
        p.insert("out.w", Tensor::matrix(h, v, uniform(&mut rng, h * v, 0.01))?);
        p.insert("out.b", Tensor::vector(alloc::vec![0.0; v]));
        Ok(Self {
            config,
            vocab_size,
            feat_dim,
            params: p,
        })
    }

    /// Binds every parameter into `g`; entries selected by `trainable`
    /// become gradient-carrying leaves, the rest constants.
    pub fn bind(&self, g: &mut Graph, trainable: impl Fn(&str) -> bool) -> Result<CaptionerVars> {
        CaptionerVars::assemble(&mut |name: &str| {
            let t = self.params.get(name)?.clone();
            Ok(g.leaf(t, trainable(name)))
        })
    }

    /// Handles for a parameter set already bound with [`ParamSet::bind`].
    pub fn vars_from(params: &ParamSet, bound: &[Var]) -> Result<CaptionerVars> {
        CaptionerVars::assemble(&mut |name: &str| params.bound_var(bound, name))
    }

    /// `(name, var)` pairs in parameter order, for reading gradients back.
    pub fn named_vars(vars: &CaptionerVars) -> [(&'static str, Var); 10] {
        [
            ("embed", vars.embed),
            ("att_lstm.w", vars.att_lstm.w),
            ("att_lstm.b", vars.att_lstm.b),
            ("att.region", vars.att_region),
            ("att.hidden", vars.att_hidden),
            ("att.score", vars.att_score),
            ("lang_lstm.w", vars.lang_lstm.w),
            ("lang_lstm.b", vars.lang_lstm.b),
            ("out.w", vars.out_w),
            ("out.b", vars.out_b),
        ]
    }
}

/// Graph handles for one bound copy of the captioner parameters.
#[derive(Debug, Clone, Copy)]
pub struct CaptionerVars {
    pub embed: Var,
    pub att_lstm: LstmVars,
    pub att_region: Var,
    pub att_hidden: Var,
    pub att_score: Var,
    pub lang_lstm: LstmVars,
    pub out_w: Var,
    pub out_b: Var,
}

impl CaptionerVars {
    fn assemble(get: &mut impl FnMut(&str) -> Result<Var>) -> Result<Self> {
        Ok(Self {
            embed: get("embed")?,
            att_lstm: LstmVars {
                w: get("att_lstm.w")?,
                b: get("att_lstm.b")?,
            },
            att_region: get("att.region")?,
            att_hidden: get("att.hidden")?,
            att_score: get("att.score")?,
            lang_lstm: LstmVars {
                w: get("lang_lstm.w")?,
                b: get("lang_lstm.b")?,
            },
            out_w: get("out.w")?,
            out_b: get("out.b")?,
        })
    }
}
