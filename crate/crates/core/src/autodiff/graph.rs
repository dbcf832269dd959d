use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::math;
use crate::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bcast {
    Same,
    LeftScalar,
    RightScalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Binary(BinOp, Var, Var, Bcast),
    Neg(Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Dot(Var, Var),
    Norm(Var),
    Sum(Var),
    Mean(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Row(Var, usize),
    Pick(Var, usize),
    Softmax(Var),
    LogSoftmax(Var),
    StraightThrough(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Summary of one backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackwardStats {
    /// Records whose backward rule ran.
    pub visited: usize,
}

/// Tape of operation records in creation (topological) order.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf; receives a gradient in `backward`.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn leaf(&mut self, t: Tensor, requires_grad: bool) -> Var {
        self.push(t, Op::Leaf, requires_grad)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// First element; meant for shape-`[1]` nodes.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    /// Gradient of the last `backward` root with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn shape_err(&self, op: &'static str, a: Var, b: Var) -> Error {
        Error::Shape {
            op,
            lhs: self.shape(a).to_vec(),
            rhs: self.shape(b).to_vec(),
        }
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| f(x)).collect();
        let value = Tensor::from_parts(t.shape().to_vec(), data);
        let rg = self.rg(a);
        self.push(value, op, rg)
    }

    fn binary(&mut self, kind: BinOp, name: &'static str, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let bc = if sa == sb {
            Bcast::Same
        } else if sa == [1] {
            Bcast::LeftScalar
        } else if sb == [1] {
            Bcast::RightScalar
        } else {
            return Err(self.shape_err(name, a, b));
        };
        let (xa, xb) = (self.data(a), self.data(b));
        if kind == BinOp::Div && xb.iter().any(|&x| x == 0.0) {
            return Err(Error::Domain {
                op: "div",
                detail: "division by zero".into(),
            });
        }
        let f = |x: f64, y: f64| match kind {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => x / y,
        };
        let (shape, data): (Vec<usize>, Vec<f64>) = match bc {
            Bcast::Same => (
                sa.to_vec(),
                xa.iter().zip(xb).map(|(&x, &y)| f(x, y)).collect(),
            ),
            Bcast::LeftScalar => (sb.to_vec(), xb.iter().map(|&y| f(xa[0], y)).collect()),
            Bcast::RightScalar => (sa.to_vec(), xa.iter().map(|&x| f(x, xb[0])).collect()),
        };
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::from_parts(shape, data), Op::Binary(kind, a, b, bc), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinOp::Add, "add", a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinOp::Sub, "sub", a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinOp::Mul, "mul", a, b)
    }

    /// Elementwise quotient; any zero divisor is rejected.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinOp::Div, "div", a, b)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.unary(a, Op::Neg(a), |x| -x)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, Op::Scale(a, k), |x| k * x)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), math::sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), math::tanh)
    }

    /// `max(0, x)` elementwise.
    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), math::exp)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(x) = self.data(a).iter().find(|&&x| x <= 0.0 || x.is_nan()) {
            return Err(Error::Domain {
                op: "log",
                detail: format!("non-positive argument {x}"),
            });
        }
        Ok(self.unary(a, Op::Log(a), math::ln))
    }

    /// `[k] x [k,n] -> [n]` or `[m,k] x [k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2();
        let (kb, n) = match self.shape(b) {
            [r, c] => (*r, *c),
            _ => return Err(self.shape_err("matmul", a, b)),
        };
        if k != kb {
            return Err(self.shape_err("matmul", a, b));
        }
        let (xa, xb) = (self.data(a), self.data(b));
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let s = xa[i * k + p];
                if s == 0.0 {
                    continue;
                }
                let brow = &xb[p * n..(p + 1) * n];
                for (o, &w) in row.iter_mut().zip(brow) {
                    *o += s * w;
                }
            }
        }
        let shape = if self.shape(a).len() == 1 {
            vec![n]
        } else {
            vec![m, n]
        };
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::from_parts(shape, out), Op::MatMul(a, b), rg))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).len() != self.value(b).len() {
            return Err(self.shape_err("dot", a, b));
        }
        let s = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| x * y)
            .sum();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b), rg))
    }

    /// Euclidean norm. The gradient at the origin is taken as zero.
    pub fn norm(&mut self, a: Var) -> Var {
        let s = math::sqrt(self.data(a).iter().map(|x| x * x).sum());
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Norm(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Mean(a), rg)
    }

    /// Flattens and joins the inputs into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Empty("concat inputs"));
        }
        let mut data = Vec::with_capacity(parts.iter().map(|&p| self.value(p).len()).sum());
        for &p in parts {
            data.extend_from_slice(self.data(p));
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        let n = data.len();
        Ok(self.push(Tensor::from_parts(vec![n], data), Op::Concat(parts.to_vec()), rg))
    }

    /// Contiguous range `[start, start+len)` of the flattened input.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let total = self.value(a).len();
        if len == 0 || start + len > total {
            return Err(Error::Index {
                op: "slice",
                index: start + len,
                len: total,
            });
        }
        let data = self.data(a)[start..start + len].to_vec();
        let rg = self.rg(a);
        Ok(self.push(Tensor::from_parts(vec![len], data), Op::Slice(a, start), rg))
    }

    /// Row `i` of a matrix (embedding lookup).
    pub fn row(&mut self, table: Var, i: usize) -> Result<Var> {
        let (r, c) = match self.shape(table) {
            [r, c] => (*r, *c),
            s => {
                return Err(Error::Shape {
                    op: "row",
                    lhs: s.to_vec(),
                    rhs: vec![i],
                })
            }
        };
        if i >= r {
            return Err(Error::Index {
                op: "row",
                index: i,
                len: r,
            });
        }
        let data = self.data(table)[i * c..(i + 1) * c].to_vec();
        let rg = self.rg(table);
        Ok(self.push(Tensor::from_parts(vec![c], data), Op::Row(table, i), rg))
    }

    /// Single entry as a scalar.
    pub fn pick(&mut self, a: Var, i: usize) -> Result<Var> {
        let len = self.value(a).len();
        if i >= len {
            return Err(Error::Index {
                op: "pick",
                index: i,
                len,
            });
        }
        let x = self.data(a)[i];
        let rg = self.rg(a);
        Ok(self.push(Tensor::scalar(x), Op::Pick(a, i), rg))
    }

    fn check_vector(&self, op: &'static str, a: Var) -> Result<()> {
        if self.shape(a).len() != 1 {
            return Err(Error::Shape {
                op,
                lhs: self.shape(a).to_vec(),
                rhs: vec![],
            });
        }
        Ok(())
    }

    /// Max-shifted softmax of a vector.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.check_vector("softmax", a)?;
        let data = softmax_values(self.data(a));
        let rg = self.rg(a);
        let n = data.len();
        Ok(self.push(Tensor::from_parts(vec![n], data), Op::Softmax(a), rg))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.check_vector("log_softmax", a)?;
        let x = self.data(a);
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + math::ln(x.iter().map(|&v| math::exp(v - m)).sum());
        let data: Vec<f64> = x.iter().map(|&v| v - lse).collect();
        let rg = self.rg(a);
        let n = data.len();
        Ok(self.push(Tensor::from_parts(vec![n], data), Op::LogSoftmax(a), rg))
    }

    /// Forward value is `hard` exactly; backward hands the upstream gradient
    /// to `probs` unchanged (identity Jacobian).
    pub fn straight_through(&mut self, probs: Var, hard: Tensor) -> Result<Var> {
        if hard.shape() != self.shape(probs) {
            return Err(Error::Shape {
                op: "straight_through",
                lhs: self.shape(probs).to_vec(),
                rhs: hard.shape().to_vec(),
            });
        }
        let rg = self.rg(probs);
        Ok(self.push(hard, Op::StraightThrough(probs), rg))
    }

    /// Reverse sweep from a scalar root. Gradients from earlier calls are
    /// discarded.
    pub fn backward(&mut self, root: Var) -> Result<BackwardStats> {
        if self.shape(root) != [1] {
            return Err(Error::NonScalarRoot(self.shape(root).to_vec()));
        }
        self.grads.clear();
        self.grads.resize(self.nodes.len(), None);
        self.grads[root.0] = Some(vec![1.0]);
        let mut visited = 0;
        for i in (0..=root.0).rev() {
            let (before, rest) = self.grads.split_at_mut(i);
            let Some(g) = rest[0].as_deref() else {
                continue;
            };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            visited += 1;
            backprop(&self.nodes, before, node, g);
        }
        Ok(BackwardStats { visited })
    }
}

pub(crate) fn softmax_values(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = x.iter().map(|&v| math::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    e
}

fn acc<'a>(
    nodes: &[Node],
    grads: &'a mut [Option<Vec<f64>>],
    v: Var,
) -> Option<&'a mut Vec<f64>> {
    if !nodes[v.0].requires_grad {
        return None;
    }
    let len = nodes[v.0].value.len();
    Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
}

fn backprop(nodes: &[Node], grads: &mut [Option<Vec<f64>>], node: &Node, g: &[f64]) {
    let val = |v: Var| nodes[v.0].value.data();
    let y = node.value.data();
    match &node.op {
        Op::Leaf => {}
        &Op::Binary(kind, a, b, bc) => {
            let (xa, xb) = (val(a), val(b));
            let n = g.len();
            // Per-output-element partials.
            let ia = |j: usize| if bc == Bcast::LeftScalar { 0 } else { j };
            let ib = |j: usize| if bc == Bcast::RightScalar { 0 } else { j };
            if let Some(ga) = acc(nodes, grads, a) {
                for j in 0..n {
                    let d = match kind {
                        BinOp::Add | BinOp::Sub => 1.0,
                        BinOp::Mul => xb[ib(j)],
                        BinOp::Div => 1.0 / xb[ib(j)],
                    };
                    ga[ia(j)] += g[j] * d;
                }
            }
            if let Some(gb) = acc(nodes, grads, b) {
                for j in 0..n {
                    let d = match kind {
                        BinOp::Add => 1.0,
                        BinOp::Sub => -1.0,
                        BinOp::Mul => xa[ia(j)],
                        BinOp::Div => -xa[ia(j)] / (xb[ib(j)] * xb[ib(j)]),
                    };
                    gb[ib(j)] += g[j] * d;
                }
            }
        }
        &Op::Neg(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga.iter_mut().zip(g).for_each(|(o, &d)| *o -= d);
            }
        }
        &Op::Scale(a, k) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga.iter_mut().zip(g).for_each(|(o, &d)| *o += k * d);
            }
        }
        &Op::MatMul(a, b) => {
            let (m, k) = nodes[a.0].value.dims2();
            let n = nodes[b.0].value.dims2().1;
            let (xa, xb) = (val(a), val(b));
            if let Some(ga) = acc(nodes, grads, a) {
                // dA = G · Bᵀ
                for i in 0..m {
                    let gi = &g[i * n..(i + 1) * n];
                    for p in 0..k {
                        let brow = &xb[p * n..(p + 1) * n];
                        ga[i * k + p] += gi.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            if let Some(gb) = acc(nodes, grads, b) {
                // dB = Aᵀ · G
                for i in 0..m {
                    let gi = &g[i * n..(i + 1) * n];
                    for p in 0..k {
                        let s = xa[i * k + p];
                        if s == 0.0 {
                            continue;
                        }
                        let row = &mut gb[p * n..(p + 1) * n];
                        for (o, &d) in row.iter_mut().zip(gi) {
                            *o += s * d;
                        }
                    }
                }
            }
        }
        &Op::Sigmoid(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                for ((o, &d), &s) in ga.iter_mut().zip(g).zip(y) {
                    *o += d * s * (1.0 - s);
                }
            }
        }
        &Op::Tanh(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                for ((o, &d), &t) in ga.iter_mut().zip(g).zip(y) {
                    *o += d * (1.0 - t * t);
                }
            }
        }
        &Op::Relu(a) => {
            let x = val(a);
            if let Some(ga) = acc(nodes, grads, a) {
                for ((o, &d), &xi) in ga.iter_mut().zip(g).zip(x) {
                    if xi > 0.0 {
                        *o += d;
                    }
                }
            }
        }
        &Op::Exp(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                for ((o, &d), &e) in ga.iter_mut().zip(g).zip(y) {
                    *o += d * e;
                }
            }
        }
        &Op::Log(a) => {
            let x = val(a);
            if let Some(ga) = acc(nodes, grads, a) {
                for ((o, &d), &xi) in ga.iter_mut().zip(g).zip(x) {
                    *o += d / xi;
                }
            }
        }
        &Op::Dot(a, b) => {
            let (xa, xb) = (val(a), val(b));
            if let Some(ga) = acc(nodes, grads, a) {
                ga.iter_mut().zip(xb).for_each(|(o, &v)| *o += g[0] * v);
            }
            if let Some(gb) = acc(nodes, grads, b) {
                gb.iter_mut().zip(xa).for_each(|(o, &v)| *o += g[0] * v);
            }
        }
        &Op::Norm(a) => {
            let x = val(a);
            let nrm = y[0];
            if let Some(ga) = acc(nodes, grads, a) {
                if nrm > 0.0 {
                    ga.iter_mut().zip(x).for_each(|(o, &v)| *o += g[0] * v / nrm);
                }
            }
        }
        &Op::Sum(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga.iter_mut().for_each(|o| *o += g[0]);
            }
        }
        &Op::Mean(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                let k = g[0] / ga.len() as f64;
                ga.iter_mut().for_each(|o| *o += k);
            }
        }
        Op::Concat(parts) => {
            let mut off = 0;
            for &p in parts {
                let len = nodes[p.0].value.len();
                if let Some(gp) = acc(nodes, grads, p) {
                    gp.iter_mut()
                        .zip(&g[off..off + len])
                        .for_each(|(o, &d)| *o += d);
                }
                off += len;
            }
        }
        &Op::Slice(a, start) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga[start..start + g.len()]
                    .iter_mut()
                    .zip(g)
                    .for_each(|(o, &d)| *o += d);
            }
        }
        &Op::Row(t, i) => {
            let c = g.len();
            if let Some(gt) = acc(nodes, grads, t) {
                gt[i * c..(i + 1) * c]
                    .iter_mut()
                    .zip(g)
                    .for_each(|(o, &d)| *o += d);
            }
        }
        &Op::Pick(a, i) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga[i] += g[0];
            }
        }
        &Op::Softmax(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                let gy: f64 = g.iter().zip(y).map(|(d, s)| d * s).sum();
                for ((o, &d), &s) in ga.iter_mut().zip(g).zip(y) {
                    *o += s * (d - gy);
                }
            }
        }
        &Op::LogSoftmax(a) => {
            if let Some(ga) = acc(nodes, grads, a) {
                let gs: f64 = g.iter().sum();
                for ((o, &d), &ls) in ga.iter_mut().zip(g).zip(y) {
                    *o += d - math::exp(ls) * gs;
                }
            }
        }
        &Op::StraightThrough(p) => {
            if let Some(gp) = acc(nodes, grads, p) {
                gp.iter_mut().zip(g).for_each(|(o, &d)| *o += d);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(g: &mut Graph, x: &[f64]) -> Var {
        g.param(Tensor::vector(x.to_vec()))
    }

    #[test]
    fn matmul_identity_and_zero() {
        let mut g = Graph::new();
        let id = g.constant(Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let b = g.constant(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let out = g.matmul(id, b).unwrap();
        assert_eq!(g.data(out), g.data(b));
        let z = g.constant(Tensor::zeros(&[3, 2]));
        let out = g.matmul(z, b).unwrap();
        assert_eq!(g.shape(out), &[3, 3]);
        assert!(g.data(out).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matmul_hand_arithmetic() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let b = g.constant(Tensor::matrix(2, 1, vec![5.0, 6.0]).unwrap());
        let out = g.matmul(a, b).unwrap();
        assert_eq!(g.shape(out), &[2, 1]);
        assert_eq!(g.data(out), &[17.0, 39.0]);
    }

    #[test]
    fn matmul_shape_error_names_dims() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        let err = g.matmul(a, b).unwrap_err();
        let msg = alloc::string::ToString::to_string(&err);
        assert!(msg.contains("matmul") && msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn matmul_backward_rules() {
        let mut g = Graph::new();
        let a = g.param(Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap());
        let b = g.param(Tensor::matrix(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap());
        let c = g.matmul(a, b).unwrap();
        let s = g.sum(c);
        g.backward(s).unwrap();
        // dA = 1·Bᵀ row sums, dB = Aᵀ·1
        assert_eq!(g.grad(a).unwrap(), &[7.0, 11.0]);
        assert_eq!(g.grad(b).unwrap(), &[1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn softmax_examples() {
        let mut g = Graph::new();
        let x = v(&mut g, &[0.0, 0.0]);
        let s = g.softmax(x).unwrap();
        assert_eq!(g.data(s), &[0.5, 0.5]);
        let x = v(&mut g, &[1.0, 0.0]);
        let s = g.softmax(x).unwrap();
        // e/(e+1) computed directly
        let e = core::f64::consts::E;
        assert!((g.data(s)[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((g.data(s)[0] - 0.731059).abs() < 1e-5);
        assert!((g.data(s)[1] - 0.268941).abs() < 1e-5);
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut g = Graph::new();
        let x = v(&mut g, &[0.3, -1.2, 2.5]);
        let y = v(&mut g, &[100.3, 98.8, 102.5]);
        let (sx, sy) = (g.softmax(x).unwrap(), g.softmax(y).unwrap());
        for (a, b) in g.data(sx).iter().zip(g.data(sy)) {
            assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = g.data(sx).iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn primitive_examples() {
        let mut g = Graph::new();
        let a = v(&mut g, &[1.0, 0.0]);
        let b = v(&mut g, &[0.0, 1.0]);
        let d = g.dot(a, b).unwrap();
        assert_eq!(g.scalar(d), 0.0);
        let m = v(&mut g, &[-3.0]);
        let r = g.relu(m);
        assert_eq!(g.scalar(r), 0.0);
        let p = v(&mut g, &[3.0, 4.0]);
        let n = g.norm(p);
        assert_eq!(g.scalar(n), 5.0);
    }

    #[test]
    fn log_rejects_non_positive() {
        let mut g = Graph::new();
        let a = v(&mut g, &[1.0, 0.0]);
        assert!(matches!(g.log(a), Err(Error::Domain { op: "log", .. })));
        let b = v(&mut g, &[-2.0]);
        assert!(g.log(b).is_err());
    }

    #[test]
    fn scalar_broadcast_only() {
        let mut g = Graph::new();
        let a = v(&mut g, &[1.0, 2.0, 3.0]);
        let s = v(&mut g, &[2.0]);
        let p = g.mul(s, a).unwrap();
        assert_eq!(g.data(p), &[2.0, 4.0, 6.0]);
        let b = v(&mut g, &[1.0, 2.0]);
        assert!(matches!(g.add(a, b), Err(Error::Shape { op: "add", .. })));
        let t = g.sum(p);
        g.backward(t).unwrap();
        assert_eq!(g.grad(s).unwrap(), &[6.0]);
        assert_eq!(g.grad(a).unwrap(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        let mut g = Graph::new();
        let x = v(&mut g, &[0.5, -1.5, 2.0]);
        let d = g.dot(x, x).unwrap();
        g.backward(d).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0, -3.0, 4.0]);
    }

    #[test]
    fn backward_visits_each_record_once() {
        let mut g = Graph::new();
        let x = v(&mut g, &[0.5, -1.5]);
        let c = g.constant(Tensor::vector(alloc::vec![1.0, 1.0]));
        let y = g.mul(x, c).unwrap();
        let z = g.tanh(y);
        let s = g.sum(z);
        let stats = g.backward(s).unwrap();
        // x, y, z, s require grad; the constant does not.
        assert_eq!(stats.visited, 4);
        assert!(g.grad(c).is_none());
    }

    #[test]
    fn straight_through_identity_backward() {
        let mut g = Graph::new();
        let p = v(&mut g, &[0.2, 0.5, 0.3]);
        let st = g
            .straight_through(p, Tensor::one_hot(3, 1))
            .unwrap();
        assert_eq!(g.data(st), &[0.0, 1.0, 0.0]);
        let w = g.constant(Tensor::vector(alloc::vec![0.7, -1.1, 2.5]));
        let l = g.dot(st, w).unwrap();
        g.backward(l).unwrap();
        assert_eq!(g.grad(p).unwrap(), &[0.7, -1.1, 2.5]);
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut g = Graph::new();
        let x = v(&mut g, &[1.0, 2.0]);
        assert!(matches!(g.backward(x), Err(Error::NonScalarRoot(_))));
    }
}
