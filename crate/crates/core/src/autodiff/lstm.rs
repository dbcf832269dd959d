use alloc::vec;

use super::{Graph, Var};
use crate::{Error, Result};

/// Fused LSTM weights: `w` is `[(d_in + d_h), 4·d_h]` with gate blocks in
/// the order input, forget, candidate, output; `b` is `[4·d_h]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w: Var,
    pub b: Var,
}

/// One LSTM step. Returns `(h', c')`.
pub fn lstm_cell(g: &mut Graph, x: Var, h: Var, c: Var, p: &LstmVars) -> Result<(Var, Var)> {
    let d_in = g.value(x).len();
    let d_h = g.value(h).len();
    if g.value(c).len() != d_h {
        return Err(Error::Shape {
            op: "lstm_cell",
            lhs: g.shape(h).to_vec(),
            rhs: g.shape(c).to_vec(),
        });
    }
    let ws = g.shape(p.w).to_vec();
    if ws != [d_in + d_h, 4 * d_h] || g.value(p.b).len() != 4 * d_h {
        return Err(Error::Shape {
            op: "lstm_cell",
            lhs: vec![d_in + d_h, 4 * d_h],
            rhs: ws,
        });
    }
    let xh = g.concat(&[x, h])?;
    let z = g.matmul(xh, p.w)?;
    let z = g.add(z, p.b)?;
    let zi = g.slice(z, 0, d_h)?;
    let zf = g.slice(z, d_h, d_h)?;
    let zg = g.slice(z, 2 * d_h, d_h)?;
    let zo = g.slice(z, 3 * d_h, d_h)?;
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let tc = g.tanh(c_next);
    let h_next = g.mul(o, tc)?;
    Ok((h_next, c_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::math;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bind(g: &mut Graph, d_in: usize, d_h: usize, w: Vec<f64>, b: Vec<f64>) -> LstmVars {
        LstmVars {
            w: g.param(Tensor::matrix(d_in + d_h, 4 * d_h, w).unwrap()),
            b: g.param(Tensor::vector(b)),
        }
    }

    #[test]
    fn zero_params_fixed_point() {
        let mut g = Graph::new();
        let p = bind(&mut g, 3, 2, vec![0.0; 5 * 8], vec![0.0; 8]);
        let x = g.constant(Tensor::vector(vec![0.3, -0.2, 0.9]));
        let h = g.constant(Tensor::vector(vec![0.4, 0.1]));
        let c = g.constant(Tensor::zeros(&[2]));
        let (h1, c1) = lstm_cell(&mut g, x, h, c, &p).unwrap();
        assert_eq!(g.data(h1), &[0.0, 0.0]);
        assert_eq!(g.data(c1), &[0.0, 0.0]);
        assert_eq!((g.shape(h1), g.shape(c1)), (&[2][..], &[2][..]));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let mut g = Graph::new();
        let p = bind(&mut g, 3, 2, vec![0.0; 5 * 8], vec![0.0; 8]);
        let x = g.constant(Tensor::zeros(&[4]));
        let h = g.constant(Tensor::zeros(&[2]));
        let c = g.constant(Tensor::zeros(&[2]));
        assert!(lstm_cell(&mut g, x, h, c, &p).is_err());
    }

    /// Gate equations written out per unit, independent of the graph.
    fn oracle(x: &[f64], h: &[f64], c: &[f64], w: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d_h = h.len();
        let xh: Vec<f64> = x.iter().chain(h).cloned().collect();
        let pre = |col: usize| -> f64 {
            b[col] + (0..xh.len()).map(|r| xh[r] * w[r * 4 * d_h + col]).sum::<f64>()
        };
        let mut h2 = vec![0.0; d_h];
        let mut c2 = vec![0.0; d_h];
        for u in 0..d_h {
            let i = math::sigmoid(pre(u));
            let f = math::sigmoid(pre(d_h + u));
            let gg = math::tanh(pre(2 * d_h + u));
            let o = math::sigmoid(pre(3 * d_h + u));
            c2[u] = f * c[u] + i * gg;
            h2[u] = o * math::tanh(c2[u]);
        }
        (h2, c2)
    }

    #[test]
    fn random_step_matches_gate_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (d_in, d_h) = (5, 4);
        let mut r = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (w, b, x, h, c) = (r((d_in + d_h) * 4 * d_h), r(4 * d_h), r(d_in), r(d_h), r(d_h));
        let (h_ref, c_ref) = oracle(&x, &h, &c, &w, &b);
        let mut g = Graph::new();
        let p = bind(&mut g, d_in, d_h, w, b);
        let xv = g.constant(Tensor::vector(x));
        let hv = g.constant(Tensor::vector(h));
        let cv = g.constant(Tensor::vector(c));
        let (h1, c1) = lstm_cell(&mut g, xv, hv, cv, &p).unwrap();
        for (a, e) in g.data(h1).iter().zip(&h_ref).chain(g.data(c1).iter().zip(&c_ref)) {
            assert!((a - e).abs() < 1e-6);
        }
    }
}
