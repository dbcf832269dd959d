use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckOutcome, Suite, SuiteReport};
use crate::autodiff::{gradcheck, lstm_cell, Graph, LstmVars, ParamSet, Tensor, Var};
use crate::captioner::{caption_targets, decode_step, xent_loss, CaptionerConfig, CaptionerModel, DecoderState, ImageContext, TokenInput};
use crate::retriever::{loss_ccos, loss_cdp, loss_cos, loss_dp, RetrieverConfig, RetrieverModel};
use crate::synthworld::RegionFeatureGrid;
use crate::Result;

pub const GRAD_EPS: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

type Builder = fn(&mut Graph, &[Var], &[f64]) -> Result<Var>;

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Values bounded away from zero, with random signs.
fn away_from_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let x = rng.random_range(0.2..1.5);
            if rng.random::<bool>() {
                x
            } else {
                -x
            }
        })
        .collect()
}

/// `Σ w ⊙ y`: reduces any output to a scalar with a fixed random weighting.
fn project(g: &mut Graph, y: Var, w: &[f64]) -> Result<Var> {
    let n = g.value(y).len();
    let w = g.constant(Tensor::new(g.shape(y).to_vec(), w[..n].to_vec())?);
    let p = g.mul(y, w)?;
    Ok(g.sum(p))
}

struct Primitive {
    name: &'static str,
    inputs: fn(&mut ChaCha8Rng) -> Vec<Tensor>,
    build: Builder,
}

fn vecs(rng: &mut ChaCha8Rng, k: usize) -> Vec<Tensor> {
    (0..k).map(|_| Tensor::vector(uniform(rng, 4, -1.5, 1.5))).collect()
}

fn primitives() -> Vec<Primitive> {
    vec![
        Primitive {
            name: "add",
            inputs: |r| vecs(r, 2),
            build: |g, v, w| {
                let y = g.add(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "sub",
            inputs: |r| vecs(r, 2),
            build: |g, v, w| {
                let y = g.sub(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "mul",
            inputs: |r| vecs(r, 2),
            build: |g, v, w| {
                let y = g.mul(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "mul_scalar_broadcast",
            inputs: |r| vec![Tensor::vector(uniform(r, 4, -1.5, 1.5)), Tensor::scalar(r.random_range(-2.0..2.0))],
            build: |g, v, w| {
                let y = g.mul(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "div",
            inputs: |r| vec![Tensor::vector(uniform(r, 4, -1.5, 1.5)), Tensor::vector(away_from_zero(r, 4))],
            build: |g, v, w| {
                let y = g.div(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "neg",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.neg(v[0]);
                project(g, y, w)
            },
        },
        Primitive {
            name: "scale",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.scale(v[0], -1.7);
                project(g, y, w)
            },
        },
        Primitive {
            name: "sigmoid",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.sigmoid(v[0]);
                project(g, y, w)
            },
        },
        Primitive {
            name: "tanh",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.tanh(v[0]);
                project(g, y, w)
            },
        },
        Primitive {
            name: "relu",
            inputs: |r| vec![Tensor::vector(away_from_zero(r, 4))],
            build: |g, v, w| {
                let y = g.relu(v[0]);
                project(g, y, w)
            },
        },
        Primitive {
            name: "exp",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.exp(v[0]);
                project(g, y, w)
            },
        },
        Primitive {
            name: "log",
            inputs: |r| vec![Tensor::vector(uniform(r, 4, 0.2, 3.0))],
            build: |g, v, w| {
                let y = g.log(v[0])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "matmul",
            inputs: |r| {
                vec![
                    Tensor::matrix(2, 3, uniform(r, 6, -1.0, 1.0)).expect("shape"),
                    Tensor::matrix(3, 2, uniform(r, 6, -1.0, 1.0)).expect("shape"),
                ]
            },
            build: |g, v, w| {
                let y = g.matmul(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "matmul_vector",
            inputs: |r| {
                vec![
                    Tensor::vector(uniform(r, 3, -1.0, 1.0)),
                    Tensor::matrix(3, 4, uniform(r, 12, -1.0, 1.0)).expect("shape"),
                ]
            },
            build: |g, v, w| {
                let y = g.matmul(v[0], v[1])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "dot",
            inputs: |r| vecs(r, 2),
            build: |g, v, _| g.dot(v[0], v[1]),
        },
        Primitive {
            name: "dot_shared",
            inputs: |r| vecs(r, 1),
            build: |g, v, _| g.dot(v[0], v[0]),
        },
        Primitive {
            name: "norm",
            inputs: |r| vec![Tensor::vector(away_from_zero(r, 4))],
            build: |g, v, _| Ok(g.norm(v[0])),
        },
        Primitive {
            name: "sum",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let s = g.sum(v[0]);
                let s2 = g.mul(s, s)?;
                project(g, s2, w)
            },
        },
        Primitive {
            name: "mean",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let s = g.mean(v[0]);
                let s2 = g.mul(s, s)?;
                project(g, s2, w)
            },
        },
        Primitive {
            name: "concat",
            inputs: |r| vecs(r, 2),
            build: |g, v, w| {
                let y = g.concat(&[v[0], v[1], v[0]])?;
                let y = g.tanh(y);
                project(g, y, w)
            },
        },
        Primitive {
            name: "slice",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.slice(v[0], 1, 2)?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "row",
            inputs: |r| vec![Tensor::matrix(3, 4, uniform(r, 12, -1.0, 1.0)).expect("shape")],
            build: |g, v, w| {
                let a = g.row(v[0], 2)?;
                let b = g.row(v[0], 0)?;
                let y = g.mul(a, b)?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "pick",
            inputs: |r| vecs(r, 1),
            build: |g, v, _| {
                let a = g.pick(v[0], 3)?;
                let b = g.pick(v[0], 1)?;
                g.mul(a, b)
            },
        },
        Primitive {
            name: "softmax",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.softmax(v[0])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "log_softmax",
            inputs: |r| vecs(r, 1),
            build: |g, v, w| {
                let y = g.log_softmax(v[0])?;
                project(g, y, w)
            },
        },
        Primitive {
            name: "lstm_cell",
            inputs: |r| {
                let (d_in, d_h) = (3, 2);
                vec![
                    Tensor::vector(uniform(r, d_in, -1.0, 1.0)),
                    Tensor::vector(uniform(r, d_h, -1.0, 1.0)),
                    Tensor::vector(uniform(r, d_h, -1.0, 1.0)),
                    Tensor::matrix(d_in + d_h, 4 * d_h, uniform(r, (d_in + d_h) * 4 * d_h, -0.8, 0.8))
                        .expect("shape"),
                    Tensor::vector(uniform(r, 4 * d_h, -0.5, 0.5)),
                ]
            },
            build: |g, v, w| {
                let params = LstmVars { w: v[3], b: v[4] };
                let (h, c) = lstm_cell(g, v[0], v[1], v[2], &params)?;
                let (h, c) = lstm_cell(g, v[0], h, c, &params)?;
                let y = g.concat(&[h, c])?;
                project(g, y, w)
            },
        },
    ]
}

fn check(out: &mut CheckOutcome, params: &ParamSet, f: impl Fn(&mut Graph, &[Var]) -> Result<Var>, case: &str) {
    match gradcheck(f, params, GRAD_EPS, GRAD_TOL) {
        Ok(rep) => {
            let detail = || match (&rep.failure, &rep.worst) {
                (Some(why), _) => format!("{case}: {why}"),
                (None, Some((name, i))) => format!("{case}: {name}[{i}] rel err {:.3e}", rep.max_rel_error),
                (None, None) => String::from(case),
            };
            let err = if rep.failure.is_some() { f64::INFINITY } else { rep.max_rel_error };
            out.record(err, GRAD_TOL, detail);
        }
        Err(e) => out.require(false, || format!("{case}: {e}")),
    }
}

fn params_from(inputs: Vec<Tensor>) -> ParamSet {
    let mut p = ParamSet::new();
    for (i, t) in inputs.into_iter().enumerate() {
        p.insert(&format!("x{i}"), t);
    }
    p
}

fn tiny_captioner(seed: u64, rng: &mut ChaCha8Rng) -> Result<(CaptionerModel, RegionFeatureGrid)> {
    let cfg = CaptionerConfig {
        embed_dim: 3,
        hidden_dim: 3,
        att_dim: 2,
        max_len: 4,
    };
    let (v, f, k) = (6, 4, 2);
    let mut model = CaptionerModel::new(cfg, v, f, seed)?;
    // larger output weights than the default init, so the loss is not flat
    let ow = model.params.get_mut("out.w")?;
    for x in ow.data_mut() {
        *x = rng.random_range(-0.8..0.8);
    }
    let regions: Vec<Vec<f64>> = (0..k).map(|_| uniform(rng, f, -1.0, 1.0)).collect();
    let global = (0..f).map(|j| regions.iter().map(|r| r[j]).sum::<f64>() / k as f64).collect();
    let grid = RegionFeatureGrid {
        image_id: 0,
        regions,
        global,
    };
    Ok((model, grid))
}

/// Teacher-forced loss of a three-step decode.
fn decoder_loss(g: &mut Graph, model: &CaptionerModel, params: &ParamSet, vars: &[Var], grid: &RegionFeatureGrid, ids: &[usize]) -> Result<Var> {
    let cv = CaptionerModel::vars_from(params, vars)?;
    let ctx = ImageContext::new(g, grid, &cv)?;
    let (inputs, targets) = caption_targets(ids);
    let mut state = DecoderState::zeros(g, model.config.hidden_dim);
    let mut logits = Vec::with_capacity(inputs.len());
    for &tok in &inputs {
        let (l, next) = decode_step(g, model, &cv, &ctx, TokenInput::Id(tok), state)?;
        logits.push(l);
        state = next;
    }
    xent_loss(g, &logits, &targets)
}

fn tiny_retriever(seed: u64) -> Result<RetrieverModel> {
    let cfg = RetrieverConfig {
        embed_dim: 3,
        hidden_dim: 3,
        joint_dim: 4,
        margin: 0.2,
    };
    RetrieverModel::new(cfg, 6, 4, seed)
}

/// Soft (non one-hot) rows keep the finite differences informative.
fn caption_rows(rng: &mut ChaCha8Rng, t: usize, v: usize) -> Tensor {
    Tensor::matrix(t, v, uniform(rng, t * v, 0.0, 1.0)).expect("shape")
}

fn encode_rows(g: &mut Graph, model: &RetrieverModel, rows: Var, t: usize) -> Result<Var> {
    let vars = model.bind(g, false)?;
    let one_hots = (0..t).map(|i| g.row(rows, i)).collect::<Result<Vec<_>>>()?;
    model.encode_caption(g, &vars, &one_hots)
}

/// Finite-difference checks of every primitive, the unrolled decoder under
/// the cross-entropy loss, and the four similarity losses composed with the
/// caption encoder, each over `seeds` random instances.
pub fn gradcheck_suite(seeds: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for p in primitives() {
        let mut out = CheckOutcome::new(p.name);
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = params_from((p.inputs)(&mut rng));
            let w = uniform(&mut rng, 16, -1.0, 1.0);
            let build = p.build;
            check(&mut out, &params, |g, v| build(g, v, &w), &format!("seed {seed}"));
        }
        checks.push(out);
    }

    let mut out = CheckOutcome::new("decoder_3step_xent");
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (model, grid) = tiny_captioner(seed, &mut rng)?;
        let ids = [rng.random_range(4..6), rng.random_range(4..6)];
        let params = model.params.clone();
        check(
            &mut out,
            &params,
            |g, v| decoder_loss(g, &model, &params, v, &grid, &ids),
            &format!("seed {seed}"),
        );
    }
    checks.push(out);

    let t = 3;
    let names = ["encode_caption+loss_dp", "encode_caption+loss_cos", "encode_caption+loss_cdp", "encode_caption+loss_ccos"];
    for (k, name) in names.into_iter().enumerate() {
        let mut out = CheckOutcome::new(name);
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
            let model = tiny_retriever(seed)?;
            let mut params = ParamSet::new();
            params.insert("caption", caption_rows(&mut rng, t, 6));
            params.insert("i_o", Tensor::vector(uniform(&mut rng, 4, -1.0, 1.0)));
            params.insert("i_c", Tensor::vector(uniform(&mut rng, 4, -1.0, 1.0)));
            let f = |g: &mut Graph, v: &[Var]| -> Result<Var> {
                let c = encode_rows(g, &model, v[0], t)?;
                match k {
                    0 => loss_dp(g, c, v[1]),
                    1 => loss_cos(g, c, v[1]),
                    2 => loss_cdp(g, c, v[1], v[2]),
                    _ => loss_ccos(g, c, v[1], v[2]),
                }
            };
            if k >= 2 {
                // keep the hinge active and away from its kink
                let mut g = Graph::new();
                let v = params.bind(&mut g, false);
                let l = f(&mut g, &v)?;
                if g.scalar(l) == 0.0 {
                    let (io, ic) = (params.get("i_o")?.clone(), params.get("i_c")?.clone());
                    params.insert("i_o", ic);
                    params.insert("i_c", io);
                }
                let mut g = Graph::new();
                let v = params.bind(&mut g, false);
                let l = f(&mut g, &v)?;
                if g.scalar(l) < 1e-3 {
                    continue;
                }
            }
            check(&mut out, &params, f, &format!("seed {seed}"));
        }
        checks.push(out);
    }

    Ok(SuiteReport {
        suite: Suite::Gradcheck,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_few_seeds() {
        let rep = gradcheck_suite(3).unwrap();
        assert!(rep.passed(), "{rep}");
        assert!(rep.checks.iter().any(|c| c.name == "lstm_cell"));
        assert!(rep.max_error() < GRAD_TOL);
    }

    #[test]
    fn broken_backward_is_caught() {
        // y = x·x with a doubled gradient should fail
        let mut p = ParamSet::new();
        p.insert("x", Tensor::vector(vec![0.3, -0.7]));
        let mut out = CheckOutcome::new("doubled");
        check(
            &mut out,
            &p,
            |g, v| {
                let d = g.dot(v[0], v[0])?;
                let d2 = g.scale(d, 2.0);
                let fwd = g.value(d).data()[0];
                // forward value of d, gradient of 2d
                let shift = g.constant(Tensor::scalar(-fwd));
                g.add(d2, shift)
            },
            "x",
        );
        assert!(!out.passed());
        assert!(out.first_failure.unwrap().contains("x["));
    }
}
