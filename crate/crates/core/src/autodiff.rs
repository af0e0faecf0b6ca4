//! Reverse-mode automatic differentiation over flat `f64` matrices.
//!
//! A [`Graph`] is an append-only Wengert list: building an operation computes
//! its forward value immediately and records parents, so node indices are
//! already in topological order. [`Graph::backward`] replays the list in
//! reverse and accumulates gradients into bound [`Parameter`]s.
//!
//! The op set is exactly what three-layer dense networks, softmax heads and
//! the relaxed-categorical training losses need. There is no broadcasting
//! beyond per-column bias addition and the explicit [`Graph::broadcast_cols`].

use crate::error::{Error, Result};
use crate::matrix::{matmul_acc, matmul_transpose_acc, outer_acc, Matrix};

/// Index of a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Index of a parameter in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// A learnable tensor with its gradient accumulator and Adam state.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub value: Matrix,
    pub grad: Matrix,
    adam_m: Matrix,
    adam_v: Matrix,
    step_count: u64,
}

impl Parameter {
    fn new(value: Matrix) -> Self {
        let (r, c) = (value.rows(), value.cols());
        Parameter {
            value,
            grad: Matrix::zeros(r, c),
            adam_m: Matrix::zeros(r, c),
            adam_v: Matrix::zeros(r, c),
            step_count: 0,
        }
    }
}

/// Named collection of parameters owned by one model.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
    names: Vec<String>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, value: Matrix) -> ParamId {
        let id = ParamId(self.params.len());
        self.params.push(Parameter::new(value));
        self.names.push(name.to_string());
        id
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].grad
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Total number of scalar entries across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    /// One Adam update with bias correction on every parameter, consuming
    /// (and then zeroing) the accumulated gradients.
    pub fn adam_step(&mut self, lr: f64, beta1: f64, beta2: f64, eps: f64) {
        for p in &mut self.params {
            p.step_count += 1;
            let t = p.step_count as i32;
            let bc1 = 1.0 - beta1.powi(t);
            let bc2 = 1.0 - beta2.powi(t);
            let n = p.value.numel();
            for i in 0..n {
                let g = p.grad.data()[i];
                let m = beta1 * p.adam_m.data()[i] + (1.0 - beta1) * g;
                let v = beta2 * p.adam_v.data()[i] + (1.0 - beta2) * g * g;
                p.adam_m.data_mut()[i] = m;
                p.adam_v.data_mut()[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                p.value.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.grad.fill(0.0);
        }
    }
}

/// Default Adam hyperparameters.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    /// parents: [weights, bias, input]
    Dense,
    LeakyRelu {
        slope: f64,
    },
    /// Column-wise softmax over rows.
    SoftmaxCols,
    /// Column-wise log-softmax over rows.
    LogSoftmaxCols,
    Exp,
    Ln,
    Add,
    Sub,
    Mul,
    Square,
    Scale {
        c: f64,
    },
    /// The shift is baked into the forward value; backward passes through.
    AddScalar,
    /// Sum over rows per column: [K x B] -> [1 x B].
    SumRows,
    /// log(sum(exp(.))) over rows per column: [K x B] -> [1 x B].
    LogSumExpRows,
    /// Repeat a [K x 1] column across B columns.
    BroadcastCols,
    /// Stack two inputs along rows.
    ConcatRows,
    /// Mean of all entries: -> [1 x 1].
    MeanAll,
}

struct Node {
    op: Op,
    parents: [usize; 3],
    n_parents: u8,
    value: Matrix,
    grad: Matrix,
    param: Option<ParamId>,
}

/// Append-only computation graph.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].grad
    }

    fn push(&mut self, op: Op, parents: &[usize], value: Matrix, param: Option<ParamId>) -> NodeId {
        let mut ps = [0usize; 3];
        ps[..parents.len()].copy_from_slice(parents);
        let (r, c) = (value.rows(), value.cols());
        self.nodes.push(Node {
            op,
            parents: ps,
            n_parents: parents.len() as u8,
            value,
            grad: Matrix::zeros(r, c),
            param,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// A constant leaf; gradients flow to it but go nowhere further.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Leaf, &[], value, None)
    }

    /// A leaf bound to a parameter: its value is copied in now, and
    /// `backward` adds its gradient to the parameter's accumulator.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push(Op::Leaf, &[], store.value(id).clone(), Some(id))
    }

    /// `weights * input + bias`, columns of `input` treated as a batch.
    pub fn dense(&mut self, weights: NodeId, bias: NodeId, input: NodeId) -> Result<NodeId> {
        let w = &self.nodes[weights.0].value;
        let b = &self.nodes[bias.0].value;
        let x = &self.nodes[input.0].value;
        if w.cols() != x.rows() || b.rows() != w.rows() || b.cols() != 1 {
            return Err(Error::Config(format!(
                "dense shape mismatch: weights {}x{}, bias {}x{}, input {}x{}",
                w.rows(),
                w.cols(),
                b.rows(),
                b.cols(),
                x.rows(),
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(w.rows(), x.cols());
        for i in 0..w.rows() {
            out.row_mut(i).fill(b.get(i, 0));
        }
        matmul_acc(&mut out, w, x);
        Ok(self.push(Op::Dense, &[weights.0, bias.0, input.0], out, None))
    }

    /// Elementwise `x if x >= 0 else slope * x`.
    pub fn leaky_relu(&mut self, input: NodeId, slope: f64) -> NodeId {
        debug_assert!(slope > 0.0 && slope < 1.0);
        let mut out = self.nodes[input.0].value.clone();
        for v in out.data_mut() {
            if *v < 0.0 {
                *v *= slope;
            }
        }
        self.push(Op::LeakyRelu { slope }, &[input.0], out, None)
    }

    pub fn softmax_cols(&mut self, input: NodeId) -> NodeId {
        let x = &self.nodes[input.0].value;
        let out = softmax_cols_value(x);
        self.push(Op::SoftmaxCols, &[input.0], out, None)
    }

    /// Column-wise log-softmax with max subtraction; rejects non-finite logits.
    pub fn log_softmax_cols(&mut self, input: NodeId) -> Result<NodeId> {
        let x = &self.nodes[input.0].value;
        if !x.is_finite() {
            return Err(Error::Numeric("non-finite logit in log_softmax".into()));
        }
        let out = log_softmax_cols_value(x);
        Ok(self.push(Op::LogSoftmaxCols, &[input.0], out, None))
    }

    pub fn exp(&mut self, input: NodeId) -> NodeId {
        let mut out = self.nodes[input.0].value.clone();
        for v in out.data_mut() {
            *v = v.exp();
        }
        self.push(Op::Exp, &[input.0], out, None)
    }

    pub fn ln(&mut self, input: NodeId) -> NodeId {
        let mut out = self.nodes[input.0].value.clone();
        for v in out.data_mut() {
            *v = v.ln();
        }
        self.push(Op::Ln, &[input.0], out, None)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(va.same_shape(vb), "add shape mismatch");
        let mut out = va.clone();
        out.add_assign(vb);
        self.push(Op::Add, &[a.0, b.0], out, None)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(va.same_shape(vb), "sub shape mismatch");
        let mut out = va.clone();
        for (o, v) in out.data_mut().iter_mut().zip(vb.data()) {
            *o -= v;
        }
        self.push(Op::Sub, &[a.0, b.0], out, None)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(va.same_shape(vb), "mul shape mismatch");
        let mut out = va.clone();
        for (o, v) in out.data_mut().iter_mut().zip(vb.data()) {
            *o *= v;
        }
        self.push(Op::Mul, &[a.0, b.0], out, None)
    }

    pub fn square(&mut self, input: NodeId) -> NodeId {
        let mut out = self.nodes[input.0].value.clone();
        for v in out.data_mut() {
            *v *= *v;
        }
        self.push(Op::Square, &[input.0], out, None)
    }

    pub fn scale(&mut self, input: NodeId, c: f64) -> NodeId {
        let mut out = self.nodes[input.0].value.clone();
        for v in out.data_mut() {
            *v *= c;
        }
        self.push(Op::Scale { c }, &[input.0], out, None)
    }

    pub fn add_scalar(&mut self, input: NodeId, c: f64) -> NodeId {
        let mut out = self.nodes[input.0].value.clone();
        for v in out.data_mut() {
            *v += c;
        }
        self.push(Op::AddScalar, &[input.0], out, None)
    }

    pub fn sum_rows(&mut self, input: NodeId) -> NodeId {
        let x = &self.nodes[input.0].value;
        let mut out = Matrix::zeros(1, x.cols());
        for r in 0..x.rows() {
            for (o, v) in out.row_mut(0).iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        self.push(Op::SumRows, &[input.0], out, None)
    }

    pub fn log_sum_exp_rows(&mut self, input: NodeId) -> NodeId {
        let x = &self.nodes[input.0].value;
        let mut out = Matrix::zeros(1, x.cols());
        for c in 0..x.cols() {
            let mut m = f64::NEG_INFINITY;
            for r in 0..x.rows() {
                m = m.max(x.get(r, c));
            }
            let mut s = 0.0;
            for r in 0..x.rows() {
                s += (x.get(r, c) - m).exp();
            }
            out.set(0, c, m + s.ln());
        }
        self.push(Op::LogSumExpRows, &[input.0], out, None)
    }

    /// Repeat a `[K x 1]` column vector across `cols` columns.
    pub fn broadcast_cols(&mut self, input: NodeId, cols: usize) -> NodeId {
        let x = &self.nodes[input.0].value;
        assert_eq!(x.cols(), 1, "broadcast_cols expects a column vector");
        let mut out = Matrix::zeros(x.rows(), cols);
        for r in 0..x.rows() {
            out.row_mut(r).fill(x.get(r, 0));
        }
        self.push(Op::BroadcastCols, &[input.0], out, None)
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(va.cols(), vb.cols(), "concat_rows batch mismatch");
        let mut data = Vec::with_capacity((va.rows() + vb.rows()) * va.cols());
        data.extend_from_slice(va.data());
        data.extend_from_slice(vb.data());
        let out = Matrix::from_vec(va.rows() + vb.rows(), va.cols(), data);
        self.push(Op::ConcatRows, &[a.0, b.0], out, None)
    }

    pub fn mean_all(&mut self, input: NodeId) -> NodeId {
        let x = &self.nodes[input.0].value;
        let m = x.data().iter().sum::<f64>() / x.numel() as f64;
        self.push(Op::MeanAll, &[input.0], Matrix::scalar(m), None)
    }

    /// Reverse sweep from a scalar `root`. Node gradients are recomputed from
    /// scratch; gradients of parameter-bound leaves are *added* to each
    /// [`Parameter::grad`], so repeated calls accumulate until the optimizer
    /// consumes them.
    pub fn backward(&mut self, root: NodeId, store: &mut ParamStore) -> Result<()> {
        if self.nodes[root.0].value.numel() != 1 {
            return Err(Error::Usage(format!(
                "backward root must be scalar, got {}x{}",
                self.nodes[root.0].value.rows(),
                self.nodes[root.0].value.cols()
            )));
        }
        for n in &mut self.nodes {
            n.grad.fill(0.0);
        }
        self.nodes[root.0].grad.set(0, 0, 1.0);

        for i in (0..self.nodes.len()).rev() {
            // Split off the current node so parent grads can be borrowed mutably.
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            if node.grad.data().iter().all(|&g| g == 0.0) {
                continue;
            }
            let d = &node.grad;
            let parents = &node.parents[..node.n_parents as usize];
            match node.op {
                Op::Leaf => {}
                Op::Dense => {
                    let [wi, bi, xi] = [parents[0], parents[1], parents[2]];
                    // dW += d * x^T
                    {
                        let x_val = before[xi].value.clone();
                        outer_acc(&mut before[wi].grad, d, &x_val);
                    }
                    // db += row sums of d
                    for r in 0..d.rows() {
                        let s: f64 = d.row(r).iter().sum();
                        let g = before[bi].grad.get(r, 0);
                        before[bi].grad.set(r, 0, g + s);
                    }
                    // dx += W^T * d
                    let w_val = before[wi].value.clone();
                    matmul_transpose_acc(&mut before[xi].grad, &w_val, d);
                }
                Op::LeakyRelu { slope } => {
                    let p = parents[0];
                    let x = &before[p].value;
                    let g = &mut before[p].grad;
                    for idx in 0..x.numel() {
                        let f = if x.data()[idx] < 0.0 { slope } else { 1.0 };
                        g.data_mut()[idx] += f * d.data()[idx];
                    }
                }
                Op::SoftmaxCols => {
                    let p = parents[0];
                    let s = &node.value;
                    for c in 0..s.cols() {
                        let mut dot = 0.0;
                        for r in 0..s.rows() {
                            dot += d.get(r, c) * s.get(r, c);
                        }
                        for r in 0..s.rows() {
                            let add = s.get(r, c) * (d.get(r, c) - dot);
                            let g = before[p].grad.get(r, c);
                            before[p].grad.set(r, c, g + add);
                        }
                    }
                }
                Op::LogSoftmaxCols => {
                    let p = parents[0];
                    let out = &node.value;
                    for c in 0..out.cols() {
                        let dsum: f64 = (0..out.rows()).map(|r| d.get(r, c)).sum();
                        for r in 0..out.rows() {
                            let soft = out.get(r, c).exp();
                            let add = d.get(r, c) - soft * dsum;
                            let g = before[p].grad.get(r, c);
                            before[p].grad.set(r, c, g + add);
                        }
                    }
                }
                Op::Exp => {
                    let p = parents[0];
                    for idx in 0..d.numel() {
                        before[p].grad.data_mut()[idx] += d.data()[idx] * node.value.data()[idx];
                    }
                }
                Op::Ln => {
                    let p = parents[0];
                    for idx in 0..d.numel() {
                        before[p].grad.data_mut()[idx] += d.data()[idx] / before[p].value.data()[idx];
                    }
                }
                Op::Add => {
                    for &p in &[parents[0], parents[1]] {
                        for idx in 0..d.numel() {
                            before[p].grad.data_mut()[idx] += d.data()[idx];
                        }
                    }
                }
                Op::Sub => {
                    let (a, b) = (parents[0], parents[1]);
                    for idx in 0..d.numel() {
                        before[a].grad.data_mut()[idx] += d.data()[idx];
                    }
                    for idx in 0..d.numel() {
                        before[b].grad.data_mut()[idx] -= d.data()[idx];
                    }
                }
                Op::Mul => {
                    let (a, b) = (parents[0], parents[1]);
                    for idx in 0..d.numel() {
                        let (av, bv) = (before[a].value.data()[idx], before[b].value.data()[idx]);
                        before[a].grad.data_mut()[idx] += d.data()[idx] * bv;
                        before[b].grad.data_mut()[idx] += d.data()[idx] * av;
                    }
                }
                Op::Square => {
                    let p = parents[0];
                    for idx in 0..d.numel() {
                        before[p].grad.data_mut()[idx] +=
                            2.0 * before[p].value.data()[idx] * d.data()[idx];
                    }
                }
                Op::Scale { c } => {
                    let p = parents[0];
                    for idx in 0..d.numel() {
                        before[p].grad.data_mut()[idx] += c * d.data()[idx];
                    }
                }
                Op::AddScalar => {
                    let p = parents[0];
                    for idx in 0..d.numel() {
                        before[p].grad.data_mut()[idx] += d.data()[idx];
                    }
                }
                Op::SumRows => {
                    let p = parents[0];
                    let rows = before[p].value.rows();
                    for r in 0..rows {
                        for c in 0..d.cols() {
                            let g = before[p].grad.get(r, c);
                            before[p].grad.set(r, c, g + d.get(0, c));
                        }
                    }
                }
                Op::LogSumExpRows => {
                    let p = parents[0];
                    let x = &before[p].value;
                    for c in 0..x.cols() {
                        let lse = node.value.get(0, c);
                        let dc = d.get(0, c);
                        for r in 0..x.rows() {
                            let soft = (x.get(r, c) - lse).exp();
                            let g = before[p].grad.get(r, c);
                            before[p].grad.set(r, c, g + soft * dc);
                        }
                    }
                }
                Op::BroadcastCols => {
                    let p = parents[0];
                    for r in 0..d.rows() {
                        let s: f64 = d.row(r).iter().sum();
                        let g = before[p].grad.get(r, 0);
                        before[p].grad.set(r, 0, g + s);
                    }
                }
                Op::ConcatRows => {
                    let (a, b) = (parents[0], parents[1]);
                    let ra = before[a].value.rows();
                    for r in 0..d.rows() {
                        let (t, tr) = if r < ra { (a, r) } else { (b, r - ra) };
                        for c in 0..d.cols() {
                            let g = before[t].grad.get(tr, c);
                            before[t].grad.set(tr, c, g + d.get(r, c));
                        }
                    }
                }
                Op::MeanAll => {
                    let p = parents[0];
                    let n = before[p].value.numel() as f64;
                    let dv = d.get(0, 0) / n;
                    for g in before[p].grad.data_mut() {
                        *g += dv;
                    }
                }
            }
        }

        for n in &self.nodes {
            if let Some(pid) = n.param {
                self.accumulate_into(store, pid, &n.grad);
            }
        }
        Ok(())
    }

    fn accumulate_into(&self, store: &mut ParamStore, pid: ParamId, grad: &Matrix) {
        store.params[pid.0].grad.add_assign(grad);
    }
}

fn softmax_cols_value(x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for c in 0..x.cols() {
        let mut m = f64::NEG_INFINITY;
        for r in 0..x.rows() {
            m = m.max(x.get(r, c));
        }
        let mut s = 0.0;
        for r in 0..x.rows() {
            let e = (x.get(r, c) - m).exp();
            out.set(r, c, e);
            s += e;
        }
        for r in 0..x.rows() {
            out.set(r, c, out.get(r, c) / s);
        }
    }
    out
}

fn log_softmax_cols_value(x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for c in 0..x.cols() {
        let col: Vec<f64> = (0..x.rows()).map(|r| x.get(r, c)).collect();
        let ls = crate::util::log_softmax_slice(&col);
        for (r, v) in ls.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    out
}
