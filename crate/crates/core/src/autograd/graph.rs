//! Tape of recorded operations and reverse-mode gradient propagation.
//!
//! Every op appends one node whose value is computed eagerly. `backward`
//! walks the tape in reverse recording order, which is a valid reverse
//! topological order because parents are always recorded before children.

use super::kernels;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    /// `[rows, n] + [n]`.
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Concat {
        parts: Vec<Var>,
        axis: usize,
    },
    Slice {
        src: Var,
        axis: usize,
        start: usize,
    },
    Transpose(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax {
        src: Var,
        axis: usize,
    },
    Sum(Var),
    Mean(Var),
    Conv1d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
    },
    CrossEntropy {
        probs: Var,
        targets: Vec<usize>,
    },
    LstmSeq {
        input: Var,
        weight: Var,
        bias: Var,
        reverse: bool,
        cache: kernels::LstmCache,
    },
    GruSeq {
        input: Var,
        weight: Var,
        bias: Var,
        reverse: bool,
        cache: kernels::GruCache,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Concat { .. } => "concat",
            Op::Slice { .. } => "slice",
            Op::Transpose(..) => "transpose",
            Op::Sigmoid(..) => "sigmoid",
            Op::Tanh(..) => "tanh",
            Op::Relu(..) => "relu",
            Op::Softmax { .. } => "softmax",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::Conv1d { .. } => "conv1d_dilated",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::LstmSeq { .. } => "lstm_sequence",
            Op::GruSeq { .. } => "gru_sequence",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Probability floor inside the cross-entropy logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

/// Reverse-mode tape. Single-threaded; build one per forward pass.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn push_op(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let needs = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.push(value, op, needs)
    }

    /// Trainable leaf; receives a gradient on `backward`.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Constant leaf; no gradient is computed for it.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Accumulated gradient of `v`, if `backward` reached it.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.name()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k, n) = match (ta.shape(), tb.shape()) {
            ([m, k], [k2, n]) if k == k2 => (*m, *k, *n),
            _ => return Err(mismatch("matmul", ta, tb)),
        };
        let mut out = vec![0.0; m * n];
        kernels::matmul(ta.data(), tb.data(), &mut out, m, k, n);
        let t = Tensor::new(vec![m, n], out)?;
        Ok(self.push_op(t, Op::MatMul(a, b), &[a, b]))
    }

    /// Elementwise sum. `b` may also be a rank-1 tensor matching the last
    /// dimension of a rank-2 `a`, in which case it is added to every row.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() == tb.shape() {
            let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
            let t = Tensor::new(ta.shape().to_vec(), data)?;
            return Ok(self.push_op(t, Op::Add(a, b), &[a, b]));
        }
        match (ta.shape(), tb.shape()) {
            ([_, n], [n2]) if n == n2 => {
                let n = *n;
                let bias = tb.data();
                let data = ta
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| x + bias[i % n])
                    .collect();
                let t = Tensor::new(ta.shape().to_vec(), data)?;
                Ok(self.push_op(t, Op::AddRow(a, b), &[a, b]))
            }
            _ => Err(mismatch("add", ta, tb)),
        }
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch("sub", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x - y).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push_op(t, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch("mul", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push_op(t, Op::Mul(a, b), &[a, b]))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat of zero tensors"))?;
        let base = self.value(*first).shape().to_vec();
        if axis >= base.len() {
            return Err(Error::invalid(format!(
                "concat axis {axis} out of range for shape {base:?}"
            )));
        }
        let mut total = 0;
        for p in parts {
            let s = self.shape(*p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(mismatch("concat", self.value(*first), self.value(*p)));
            }
            total += s[axis];
        }
        let mut shape = base.clone();
        shape[axis] = total;
        let (outer, _, inner) = split_axis(&shape, axis);
        let mut data = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for p in parts {
                let t = self.value(*p);
                let chunk = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let t = Tensor::new(shape, data)?;
        Ok(self.push_op(
            t,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            parts,
        ))
    }

    /// `len` entries starting at `start` along `axis`.
    pub fn slice(&mut self, src: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let ts = self.value(src);
        let shape = ts.shape();
        if axis >= shape.len() || start + len > shape[axis] {
            return Err(Error::ShapeMismatch {
                op: "slice",
                lhs: shape.to_vec(),
                rhs: vec![axis, start, len],
            });
        }
        let (outer, n, inner) = split_axis(shape, axis);
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * n + start) * inner;
            data.extend_from_slice(&ts.data()[base..base + len * inner]);
        }
        let mut out_shape = shape.to_vec();
        out_shape[axis] = len;
        let t = Tensor::new(out_shape, data)?;
        Ok(self.push_op(t, Op::Slice { src, axis, start }, &[src]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let (r, c) = match ta.shape() {
            [r, c] => (*r, *c),
            s => {
                return Err(Error::ShapeMismatch {
                    op: "transpose",
                    lhs: s.to_vec(),
                    rhs: vec![],
                })
            }
        };
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = ta.data()[i * c + j];
            }
        }
        let t = Tensor::new(vec![c, r], data)?;
        Ok(self.push_op(t, Op::Transpose(a), &[a]))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let ta = self.value(a);
        let t = Tensor::new(ta.shape().to_vec(), ta.data().iter().map(|&x| f(x)).collect())
            .expect("same shape");
        self.push_op(t, op, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, kernels::sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn softmax(&mut self, src: Var, axis: usize) -> Result<Var> {
        let ts = self.value(src);
        if axis >= ts.rank() {
            return Err(Error::invalid(format!(
                "softmax axis {axis} out of range for shape {:?}",
                ts.shape()
            )));
        }
        let (outer, n, inner) = split_axis(ts.shape(), axis);
        let mut data = ts.data().to_vec();
        for o in 0..outer {
            for i in 0..inner {
                let idx = |j: usize| (o * n + j) * inner + i;
                let max = (0..n).map(|j| data[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for j in 0..n {
                    let e = (data[idx(j)] - max).exp();
                    data[idx(j)] = e;
                    total += e;
                }
                for j in 0..n {
                    data[idx(j)] /= total;
                }
            }
        }
        let t = Tensor::new(ts.shape().to_vec(), data)?;
        Ok(self.push_op(t, Op::Softmax { src, axis }, &[src]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push_op(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    /// Arithmetic mean of all entries; the per-sequence loss reduction.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        if ta.is_empty() {
            return Err(Error::invalid("mean of an empty tensor"));
        }
        let m = ta.data().iter().sum::<f64>() / ta.len() as f64;
        Ok(self.push_op(Tensor::scalar(m), Op::Mean(a), &[a]))
    }

    /// Dilated 1-D convolution over `[channels, length]` with symmetric zero
    /// padding of `(k - 1) * dilation / 2` on each side, so the output keeps
    /// the input length. `weight` is `[out, in, k]` with odd `k`.
    pub fn conv1d_dilated(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
    ) -> Result<Var> {
        if dilation < 1 {
            return Err(Error::invalid("dilation must be at least 1"));
        }
        let (tx, tw) = (self.value(input), self.value(weight));
        let (cin, len) = match tx.shape() {
            [c, l] => (*c, *l),
            _ => return Err(mismatch("conv1d_dilated", tx, tw)),
        };
        let (cout, k) = match tw.shape() {
            [o, i, k] if *i == cin => (*o, *k),
            _ => return Err(mismatch("conv1d_dilated", tx, tw)),
        };
        if k % 2 == 0 {
            return Err(Error::invalid(format!("kernel size must be odd, got {k}")));
        }
        let bias_data = match bias {
            Some(b) => {
                let tb = self.value(b);
                if tb.shape() != [cout] {
                    return Err(mismatch("conv1d_dilated", tw, tb));
                }
                Some(tb.data())
            }
            None => None,
        };
        let mut out = vec![0.0; cout * len];
        kernels::conv1d_forward(tx.data(), tw.data(), bias_data, &mut out, cin, cout, len, k, dilation);
        let t = Tensor::new(vec![cout, len], out)?;
        let mut parents = vec![input, weight];
        parents.extend(bias);
        Ok(self.push_op(
            t,
            Op::Conv1d {
                input,
                weight,
                bias,
                dilation,
            },
            &parents,
        ))
    }

    /// Per-row `-ln(max(p[target], 1e-12))` for probabilities `[rows, C]` (or `[C]`).
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize]) -> Result<Var> {
        let tp = self.value(probs);
        let (rows, c) = tp
            .as_matrix_dims()
            .ok_or_else(|| Error::invalid(format!("cross_entropy expects rank 1 or 2, got {:?}", tp.shape())))?;
        if c < 2 {
            return Err(Error::invalid("cross_entropy needs at least two classes"));
        }
        if targets.len() != rows {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy",
                lhs: tp.shape().to_vec(),
                rhs: vec![targets.len()],
            });
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
            return Err(Error::invalid(format!(
                "class id {bad} out of range for {c} classes"
            )));
        }
        let data = targets
            .iter()
            .enumerate()
            .map(|(r, &t)| -tp.data()[r * c + t].max(LOG_CLAMP).ln())
            .collect();
        let t = Tensor::new(vec![rows], data)?;
        Ok(self.push_op(
            t,
            Op::CrossEntropy {
                probs,
                targets: targets.to_vec(),
            },
            &[probs],
        ))
    }

    /// Runs an LSTM over every row of `input` (`[L, in]`).
    ///
    /// `weight` is `[in + h, 4h]` (input rows first, then recurrent rows) with
    /// gate columns ordered input, forget, candidate, output; `bias` is `[4h]`.
    /// With `reverse` the sequence is consumed from the last row to the first;
    /// output row `t` always holds the state after consuming input row `t`.
    pub fn lstm_sequence(&mut self, input: Var, weight: Var, bias: Var, reverse: bool) -> Result<Var> {
        let (tx, tw, tb) = (self.value(input), self.value(weight), self.value(bias));
        let (len, n_in) = match tx.shape() {
            [l, i] => (*l, *i),
            _ => return Err(mismatch("lstm_sequence", tx, tw)),
        };
        let h = match tw.shape() {
            [r, c] if c % 4 == 0 && *r == n_in + c / 4 => c / 4,
            _ => return Err(mismatch("lstm_sequence", tx, tw)),
        };
        if tb.shape() != [4 * h] {
            return Err(mismatch("lstm_sequence", tw, tb));
        }
        let (out, cache) = kernels::lstm_forward(tx.data(), tw.data(), tb.data(), len, n_in, h, reverse);
        let t = Tensor::new(vec![len, h], out)?;
        Ok(self.push_op(
            t,
            Op::LstmSeq {
                input,
                weight,
                bias,
                reverse,
                cache,
            },
            &[input, weight, bias],
        ))
    }

    /// Runs a GRU over every row of `input` (`[L, in]`).
    ///
    /// `weight` is `[in + h, 3h]` with columns update, reset, candidate;
    /// `bias` is `[3h]`. Ordering semantics match [`Graph::lstm_sequence`].
    pub fn gru_sequence(&mut self, input: Var, weight: Var, bias: Var, reverse: bool) -> Result<Var> {
        let (tx, tw, tb) = (self.value(input), self.value(weight), self.value(bias));
        let (len, n_in) = match tx.shape() {
            [l, i] => (*l, *i),
            _ => return Err(mismatch("gru_sequence", tx, tw)),
        };
        let h = match tw.shape() {
            [r, c] if c % 3 == 0 && *r == n_in + c / 3 => c / 3,
            _ => return Err(mismatch("gru_sequence", tx, tw)),
        };
        if tb.shape() != [3 * h] {
            return Err(mismatch("gru_sequence", tw, tb));
        }
        let (out, cache) = kernels::gru_forward(tx.data(), tw.data(), tb.data(), len, n_in, h, reverse);
        let t = Tensor::new(vec![len, h], out)?;
        Ok(self.push_op(
            t,
            Op::GruSeq {
                input,
                weight,
                bias,
                reverse,
                cache,
            },
            &[input, weight, bias],
        ))
    }

    /// Populates gradients of every node reachable from the scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::invalid(format!(
                "backward needs a scalar root, got shape {:?}",
                self.shape(loss)
            )));
        }
        for g in &mut self.grads {
            *g = None;
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            if self.nodes[i].needs_grad {
                self.propagate(i, &g);
            }
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn accumulate(&mut self, v: Var, contrib: Vec<f64>) {
        match &mut self.grads[v.0] {
            Some(existing) => {
                for (e, c) in existing.iter_mut().zip(contrib) {
                    *e += c;
                }
            }
            slot @ None => *slot = Some(contrib),
        }
    }

    fn propagate(&mut self, i: usize, g: &[f64]) {
        let nodes = &self.nodes;
        let out = &nodes[i].value;
        let mut contribs: Vec<(Var, Vec<f64>)> = Vec::new();
        match &nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if self.wants(*a) {
                    let mut da = vec![0.0; m * k];
                    kernels::matmul_grad_lhs(g, tb.data(), &mut da, m, k, n);
                    contribs.push((*a, da));
                }
                if self.wants(*b) {
                    let mut db = vec![0.0; k * n];
                    kernels::matmul_grad_rhs(ta.data(), g, &mut db, m, k, n);
                    contribs.push((*b, db));
                }
            }
            Op::Add(a, b) => {
                contribs.push((*a, g.to_vec()));
                contribs.push((*b, g.to_vec()));
            }
            Op::AddRow(a, b) => {
                contribs.push((*a, g.to_vec()));
                let n = nodes[b.0].value.len();
                let mut db = vec![0.0; n];
                for (idx, x) in g.iter().enumerate() {
                    db[idx % n] += x;
                }
                contribs.push((*b, db));
            }
            Op::Sub(a, b) => {
                contribs.push((*a, g.to_vec()));
                contribs.push((*b, g.iter().map(|x| -x).collect()));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
                contribs.push((*a, g.iter().zip(tb.data()).map(|(x, y)| x * y).collect()));
                contribs.push((*b, g.iter().zip(ta.data()).map(|(x, y)| x * y).collect()));
            }
            Op::Concat { parts, axis } => {
                let (outer, _, inner) = split_axis(out.shape(), *axis);
                let mut offset = 0;
                let total = out.shape()[*axis] * inner;
                for p in parts {
                    let width = nodes[p.0].value.shape()[*axis] * inner;
                    let mut dp = Vec::with_capacity(outer * width);
                    for o in 0..outer {
                        let base = o * total + offset;
                        dp.extend_from_slice(&g[base..base + width]);
                    }
                    offset += width;
                    contribs.push((*p, dp));
                }
            }
            Op::Slice { src, axis, start } => {
                let ts = &nodes[src.0].value;
                let (outer, n, inner) = split_axis(ts.shape(), *axis);
                let len = out.shape()[*axis];
                let mut ds = vec![0.0; ts.len()];
                for o in 0..outer {
                    let dst = (o * n + start) * inner;
                    let srcpos = o * len * inner;
                    ds[dst..dst + len * inner].copy_from_slice(&g[srcpos..srcpos + len * inner]);
                }
                contribs.push((*src, ds));
            }
            Op::Transpose(a) => {
                let (r, c) = (out.shape()[0], out.shape()[1]);
                let mut da = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        da[j * r + i] = g[i * c + j];
                    }
                }
                contribs.push((*a, da));
            }
            Op::Sigmoid(a) => {
                let d = g.iter().zip(out.data()).map(|(x, y)| x * y * (1.0 - y)).collect();
                contribs.push((*a, d));
            }
            Op::Tanh(a) => {
                let d = g.iter().zip(out.data()).map(|(x, y)| x * (1.0 - y * y)).collect();
                contribs.push((*a, d));
            }
            Op::Relu(a) => {
                let d = g
                    .iter()
                    .zip(out.data())
                    .map(|(x, y)| if *y > 0.0 { *x } else { 0.0 })
                    .collect();
                contribs.push((*a, d));
            }
            Op::Softmax { src, axis } => {
                let (outer, n, inner) = split_axis(out.shape(), *axis);
                let y = out.data();
                let mut d = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |j: usize| (o * n + j) * inner + i;
                        let dot: f64 = (0..n).map(|j| g[idx(j)] * y[idx(j)]).sum();
                        for j in 0..n {
                            d[idx(j)] = y[idx(j)] * (g[idx(j)] - dot);
                        }
                    }
                }
                contribs.push((*src, d));
            }
            Op::Sum(a) => {
                contribs.push((*a, vec![g[0]; nodes[a.0].value.len()]));
            }
            Op::Mean(a) => {
                let n = nodes[a.0].value.len();
                contribs.push((*a, vec![g[0] / n as f64; n]));
            }
            Op::Conv1d {
                input,
                weight,
                bias,
                dilation,
            } => {
                let (tx, tw) = (&nodes[input.0].value, &nodes[weight.0].value);
                let (cin, len) = (tx.shape()[0], tx.shape()[1]);
                let (cout, k) = (tw.shape()[0], tw.shape()[2]);
                let mut dx = self.wants(*input).then(|| vec![0.0; cin * len]);
                let mut dw = vec![0.0; cout * cin * k];
                kernels::conv1d_backward(
                    g,
                    tx.data(),
                    tw.data(),
                    dx.as_deref_mut(),
                    &mut dw,
                    cin,
                    cout,
                    len,
                    k,
                    *dilation,
                );
                if let Some(dx) = dx {
                    contribs.push((*input, dx));
                }
                contribs.push((*weight, dw));
                if let Some(b) = bias {
                    let db = (0..cout).map(|o| g[o * len..(o + 1) * len].iter().sum()).collect();
                    contribs.push((*b, db));
                }
            }
            Op::CrossEntropy { probs, targets } => {
                let tp = &nodes[probs.0].value;
                let c = tp.as_matrix_dims().expect("validated").1;
                let mut d = vec![0.0; tp.len()];
                for (r, &t) in targets.iter().enumerate() {
                    let p = tp.data()[r * c + t];
                    if p > LOG_CLAMP {
                        d[r * c + t] = -g[r] / p;
                    }
                }
                contribs.push((*probs, d));
            }
            Op::LstmSeq {
                input,
                weight,
                bias,
                reverse,
                cache,
            } => {
                let (tx, tw) = (&nodes[input.0].value, &nodes[weight.0].value);
                let (len, n_in) = (tx.shape()[0], tx.shape()[1]);
                let h = out.shape()[1];
                let mut dx = self.wants(*input).then(|| vec![0.0; len * n_in]);
                let mut dw = vec![0.0; tw.len()];
                let mut db = vec![0.0; 4 * h];
                kernels::lstm_backward(
                    g,
                    tx.data(),
                    tw.data(),
                    out.data(),
                    cache,
                    dx.as_deref_mut(),
                    &mut dw,
                    &mut db,
                    len,
                    n_in,
                    h,
                    *reverse,
                );
                if let Some(dx) = dx {
                    contribs.push((*input, dx));
                }
                contribs.push((*weight, dw));
                contribs.push((*bias, db));
            }
            Op::GruSeq {
                input,
                weight,
                bias,
                reverse,
                cache,
            } => {
                let (tx, tw) = (&nodes[input.0].value, &nodes[weight.0].value);
                let (len, n_in) = (tx.shape()[0], tx.shape()[1]);
                let h = out.shape()[1];
                let mut dx = self.wants(*input).then(|| vec![0.0; len * n_in]);
                let mut dw = vec![0.0; tw.len()];
                let mut db = vec![0.0; 3 * h];
                kernels::gru_backward(
                    g,
                    tx.data(),
                    tw.data(),
                    out.data(),
                    cache,
                    dx.as_deref_mut(),
                    &mut dw,
                    &mut db,
                    len,
                    n_in,
                    h,
                    *reverse,
                );
                if let Some(dx) = dx {
                    contribs.push((*input, dx));
                }
                contribs.push((*weight, dw));
                contribs.push((*bias, db));
            }
        }
        for (v, c) in contribs {
            if self.wants(v) {
                self.accumulate(v, c);
            }
        }
    }
}
