use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckOutcome, Suite, SuiteReport};
use crate::autodiff::{Graph, Tensor, Var};
use crate::math;
use crate::retriever::{loss_ccos, loss_cdp, loss_cos, loss_dp};
use crate::Result;

pub const LOSS_TOL: f64 = 1e-9;

pub type PairLoss = fn(&mut Graph, Var, Var) -> Result<Var>;
pub type TripleLoss = fn(&mut Graph, Var, Var, Var) -> Result<Var>;

/// The loss implementations under test; swapping one out lets a test
/// confirm that the suite notices.
#[derive(Clone, Copy)]
pub struct LossImpls {
    pub dp: PairLoss,
    pub cos: PairLoss,
    pub cdp: TripleLoss,
    pub ccos: TripleLoss,
}

impl Default for LossImpls {
    fn default() -> Self {
        Self {
            dp: loss_dp,
            cos: loss_cos,
            cdp: loss_cdp,
            ccos: loss_ccos,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (math::sqrt(dot(a, a)) * math::sqrt(dot(b, b)))
}

fn hinge(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn eval_pair(f: PairLoss, c: &[f64], io: &[f64]) -> Result<f64> {
    let mut g = Graph::new();
    let c = g.constant(Tensor::vector(c.to_vec()));
    let io = g.constant(Tensor::vector(io.to_vec()));
    let l = f(&mut g, c, io)?;
    Ok(g.scalar(l))
}

fn eval_triple(f: TripleLoss, c: &[f64], io: &[f64], ic: &[f64]) -> Result<f64> {
    let mut g = Graph::new();
    let c = g.constant(Tensor::vector(c.to_vec()));
    let io = g.constant(Tensor::vector(io.to_vec()));
    let ic = g.constant(Tensor::vector(ic.to_vec()));
    let l = f(&mut g, c, io, ic)?;
    Ok(g.scalar(l))
}

fn record(out: &mut CheckOutcome, got: Result<f64>, want: f64, case: &str) {
    match got {
        Ok(x) => out.record((x - want).abs(), LOSS_TOL, || format!("{case}: got {x}, oracle {want}")),
        Err(e) => out.require(false, || format!("{case}: {e}")),
    }
}

fn exact(out: &mut CheckOutcome, got: Result<f64>, want: f64, case: &str) {
    match got {
        Ok(x) => out.require(x == want, || format!("{case}: got {x}, expected exactly {want}")),
        Err(e) => out.require(false, || format!("{case}: {e}")),
    }
}

/// Compares each loss against a plain-arithmetic oracle on `triples` random
/// vector triples (within [`LOSS_TOL`]), then checks the boundary
/// identities and worked examples exactly.
pub fn losses_suite(impls: &LossImpls, triples: usize, seed: u64) -> SuiteReport {
    let mut dp = CheckOutcome::new("loss_dp");
    let mut cs = CheckOutcome::new("loss_cos");
    let mut cdp = CheckOutcome::new("loss_cdp");
    let mut ccos = CheckOutcome::new("loss_ccos");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..triples {
        let d = rng.random_range(1..=8);
        let mut draw = || -> Vec<f64> { (0..d).map(|_| rng.random_range(-2.0..2.0)).collect() };
        let (c, io, ic) = (draw(), draw(), draw());
        let case = format!("triple {t}");
        record(&mut dp, eval_pair(impls.dp, &c, &io), -dot(&c, &io), &case);
        record(&mut cs, eval_pair(impls.cos, &c, &io), -cos(&c, &io), &case);
        record(&mut cdp, eval_triple(impls.cdp, &c, &io, &ic), hinge(dot(&c, &ic) - dot(&c, &io)), &case);
        record(&mut ccos, eval_triple(impls.ccos, &c, &io, &ic), hinge(cos(&c, &ic) - cos(&c, &io)), &case);
    }

    // boundary identities
    let (e1, e2) = (vec![1.0, 0.0], vec![0.0, 1.0]);
    let c34 = vec![3.0, 4.0];
    exact(&mut dp, eval_pair(impls.dp, &e1, &e2), 0.0, "orthogonal");
    exact(&mut dp, eval_pair(impls.dp, &[0.0, 0.0], &c34), 0.0, "zero caption");
    exact(&mut cs, eval_pair(impls.cos, &c34, &c34), -1.0, "self-similarity");
    exact(&mut cs, eval_pair(impls.cos, &e1, &e2), 0.0, "orthogonal");
    exact(&mut cdp, eval_triple(impls.cdp, &c34, &e1, &e1), 0.0, "i_c = i_o");
    exact(&mut cdp, eval_triple(impls.cdp, &e1, &c34, &e2), 0.0, "satisfied");
    exact(&mut ccos, eval_triple(impls.ccos, &c34, &e1, &e1), 0.0, "i_c = i_o");
    exact(&mut ccos, eval_triple(impls.ccos, &c34, &c34, &[-4.0, 3.0]), 0.0, "perfect match");

    // worked examples
    record(&mut dp, eval_pair(impls.dp, &[1.0, 2.0], &[3.0, 4.0]), -11.0, "(1,2)·(3,4)");
    record(&mut cs, eval_pair(impls.cos, &e1, &[1.0, 1.0]), -math::sqrt(0.5), "45 degrees");
    record(&mut cdp, eval_triple(impls.cdp, &e1, &e1, &[2.0, 0.0]), 1.0, "longer contrast");
    record(&mut ccos, eval_triple(impls.ccos, &e1, &e2, &e1), 1.0, "contrast matches");

    SuiteReport {
        suite: Suite::Losses,
        checks: vec![dp, cs, cdp, ccos],
    }
}
