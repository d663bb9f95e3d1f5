//! Reverse-mode gradient tape over the handful of matrix primitives the
//! encoder and regressor need.
//!
//! Forward calls append nodes in execution order and return [`NodeId`]s.
//! [`Tape::backward`] walks the nodes in exact reverse order and writes
//! parameter gradients into a [`Gradients`] buffer. Parameters are borrowed,
//! not copied, so recording a forward pass over a large network is cheap.

use crate::error::{Error, Result};

use super::matrix::{axpy, dot};
use super::{Gradients, Matrix, ParamId, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

enum Value<'p> {
    Borrowed(&'p Matrix),
    Owned(Matrix),
}

impl Value<'_> {
    fn get(&self) -> &Matrix {
        match self {
            Value::Borrowed(m) => m,
            Value::Owned(m) => m,
        }
    }
}

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Affine { x: NodeId, w: NodeId, b: NodeId },
    MatMul { a: NodeId, b: NodeId },
    Relu { x: NodeId },
    MeanRows { x: NodeId },
    ConcatRows { parts: Vec<NodeId> },
    Scale { x: NodeId, factor: f64 },
    Mse { pred: NodeId, target: NodeId },
}

struct Node<'p> {
    value: Value<'p>,
    op: Op,
    needs_grad: bool,
}

/// Records one forward pass. Consumed by [`Tape::backward`].
#[derive(Default)]
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        self.nodes[id.0].value.get()
    }

    /// Sign of every ReLU input (`true` where positive), in recording order.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu { x } => Some(x),
                _ => None,
            })
            .flat_map(|x| self.value(x).as_slice().iter().map(|v| *v > 0.0))
            .collect()
    }

    fn push(&mut self, value: Value<'p>, op: Op, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Constant input (no gradient).
    pub fn input(&mut self, m: Matrix) -> NodeId {
        self.push(Value::Owned(m), Op::Input, false)
    }

    /// Constant input borrowed from the caller.
    pub fn input_ref(&mut self, m: &'p Matrix) -> NodeId {
        self.push(Value::Borrowed(m), Op::Input, false)
    }

    pub fn param(&mut self, params: &'p ParamSet, id: ParamId) -> NodeId {
        self.push(Value::Borrowed(params.get(id)), Op::Param(id), true)
    }

    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.value(x).affine(self.value(w), self.value(b))?;
        let ng = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(Value::Owned(out), Op::Affine { x, w, b }, ng))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.value(a).matmul(self.value(b))?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Value::Owned(out), Op::MatMul { a, b }, ng))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).map(|v| v.max(0.0));
        let ng = self.needs(x);
        self.push(Value::Owned(out), Op::Relu { x }, ng)
    }

    /// Column-wise mean over rows (graph readout).
    pub fn mean_rows(&mut self, x: NodeId) -> Result<NodeId> {
        if self.value(x).rows() == 0 {
            return Err(Error::Shape {
                op: "mean_rows",
                left_name: "x",
                left: self.value(x).shape(),
                right_name: "required rows",
                right: (1, 0),
            });
        }
        let out = self.value(x).mean_rows();
        let ng = self.needs(x);
        Ok(self.push(Value::Owned(out), Op::MeanRows { x }, ng))
    }

    /// Stacks the rows of every part, in order.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let cols = parts
            .first()
            .map(|&p| self.value(p).cols())
            .ok_or_else(|| Error::State("concat_rows of zero parts".into()))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let m = self.value(p);
            if m.cols() != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    left_name: "first part",
                    left: self.value(parts[0]).shape(),
                    right_name: "part",
                    right: m.shape(),
                });
            }
            rows += m.rows();
            data.extend_from_slice(m.as_slice());
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        let out = Matrix::from_parts_unchecked(rows, cols, data);
        Ok(self.push(
            Value::Owned(out),
            Op::ConcatRows {
                parts: parts.to_vec(),
            },
            ng,
        ))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let out = self.value(x).map(|v| v * factor);
        let ng = self.needs(x);
        self.push(Value::Owned(out), Op::Scale { x, factor }, ng)
    }

    /// Mean squared error over all elements; a 1x1 node.
    pub fn mse(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(Error::Shape {
                op: "mse",
                left_name: "prediction",
                left: p.shape(),
                right_name: "target",
                right: t.shape(),
            });
        }
        let n = p.len().max(1) as f64;
        let loss = p
            .as_slice()
            .iter()
            .zip(t.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        let ng = self.needs(pred) || self.needs(target);
        Ok(self.push(
            Value::Owned(Matrix::from_parts_unchecked(1, 1, vec![loss])),
            Op::Mse { pred, target },
            ng,
        ))
    }

    /// Scalar value of the final node.
    pub fn loss(&self) -> Option<f64> {
        self.nodes
            .last()
            .filter(|n| n.value.get().shape() == (1, 1))
            .map(|n| n.value.get().as_slice()[0])
    }

    /// Backpropagates `seed` from the final (scalar) node and returns
    /// gradients for every block of `params`. Blocks not on the path are zero.
    pub fn backward(self, params: &ParamSet, seed: f64) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(params);
        self.backward_into(seed, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Tape::backward`] but writes into a reusable buffer, which is
    /// fully overwritten.
    pub fn backward_into(self, seed: f64, grads: &mut Gradients) -> Result<()> {
        let last = match self.nodes.last() {
            None => {
                return Err(Error::State(
                    "backward called before any forward pass".into(),
                ))
            }
            Some(n) if n.value.get().shape() != (1, 1) => {
                return Err(Error::State(format!(
                    "backward requires a scalar loss as the final node, found {:?}",
                    n.value.get().shape()
                )))
            }
            Some(_) => self.nodes.len() - 1,
        };
        if !seed.is_finite() {
            return Err(Error::NonFinite("loss seed".into()));
        }

        let mut sink = GradSink {
            node_grads: (0..self.nodes.len()).map(|_| None).collect(),
            touched: vec![false; grads.len()],
            grads,
        };
        sink.node_grads[last] = Some(Matrix::from_parts_unchecked(1, 1, vec![seed]));

        for idx in (0..self.nodes.len()).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = sink.node_grads[idx].take() else {
                continue;
            };
            match &node.op {
                Op::Input | Op::Param(_) => {}
                Op::Affine { x, w, b } => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    if self.needs(*b) {
                        sink.with(&self, *b, |buf, fresh| {
                            if fresh {
                                buf.fill(0.0);
                            }
                            for row in g.as_slice().chunks_exact(g.cols()) {
                                axpy(1.0, row, buf);
                            }
                        });
                    }
                    if self.needs(*w) {
                        sink.with(&self, *w, |buf, fresh| outer_accumulate(xv, &g, buf, fresh));
                    }
                    if self.needs(*x) {
                        sink.with(&self, *x, |buf, fresh| {
                            if fresh {
                                buf.fill(0.0);
                            }
                            grad_times_transpose(&g, wv, buf);
                        });
                    }
                }
                Op::MatMul { a, b } => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    if self.needs(*b) {
                        sink.with(&self, *b, |buf, fresh| outer_accumulate(av, &g, buf, fresh));
                    }
                    if self.needs(*a) {
                        sink.with(&self, *a, |buf, fresh| {
                            if fresh {
                                buf.fill(0.0);
                            }
                            grad_times_transpose(&g, bv, buf);
                        });
                    }
                }
                Op::Relu { x } => {
                    let out = node.value.get();
                    sink.with(&self, *x, |buf, fresh| {
                        for ((d, &gv), &o) in buf.iter_mut().zip(g.as_slice()).zip(out.as_slice()) {
                            let v = if o > 0.0 { gv } else { 0.0 };
                            if fresh {
                                *d = v;
                            } else {
                                *d += v;
                            }
                        }
                    });
                }
                Op::MeanRows { x } => {
                    let rows = self.value(*x).rows();
                    let inv = 1.0 / rows as f64;
                    sink.with(&self, *x, |buf, fresh| {
                        if fresh {
                            buf.fill(0.0);
                        }
                        for row in buf.chunks_exact_mut(g.cols().max(1)) {
                            axpy(inv, g.as_slice(), row);
                        }
                    });
                }
                Op::ConcatRows { parts } => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.value(p).rows() * cols;
                        if self.needs(p) {
                            let slice = &g.as_slice()[offset..offset + len];
                            sink.with(&self, p, |buf, fresh| {
                                if fresh {
                                    buf.copy_from_slice(slice);
                                } else {
                                    axpy(1.0, slice, buf);
                                }
                            });
                        }
                        offset += len;
                    }
                }
                Op::Scale { x, factor } => {
                    sink.with(&self, *x, |buf, fresh| {
                        if fresh {
                            buf.fill(0.0);
                        }
                        axpy(*factor, g.as_slice(), buf);
                    });
                }
                Op::Mse { pred, target } => {
                    let (p, t) = (self.value(*pred), self.value(*target));
                    let scale = 2.0 * g.as_slice()[0] / p.len().max(1) as f64;
                    for (node_id, sign) in [(*pred, 1.0), (*target, -1.0)] {
                        if !self.needs(node_id) {
                            continue;
                        }
                        sink.with(&self, node_id, |buf, fresh| {
                            for ((d, &a), &b) in buf.iter_mut().zip(p.as_slice()).zip(t.as_slice())
                            {
                                let v = sign * scale * (a - b);
                                if fresh {
                                    *d = v;
                                } else {
                                    *d += v;
                                }
                            }
                        });
                    }
                }
            }
        }

        for (i, touched) in sink.touched.iter().enumerate() {
            if !touched {
                sink.grads.block_mut(ParamId(i)).as_mut_slice().fill(0.0);
            }
        }
        Ok(())
    }
}

struct GradSink<'g> {
    node_grads: Vec<Option<Matrix>>,
    touched: Vec<bool>,
    grads: &'g mut Gradients,
}

impl GradSink<'_> {
    /// Hands `f` the gradient buffer for `node`. `fresh` means the buffer
    /// holds stale data and must be overwritten rather than accumulated.
    fn with(&mut self, tape: &Tape<'_>, node: NodeId, f: impl FnOnce(&mut [f64], bool)) {
        match tape.nodes[node.0].op {
            Op::Param(pid) => {
                let fresh = !self.touched[pid.0];
                self.touched[pid.0] = true;
                f(self.grads.block_mut(pid).as_mut_slice(), fresh);
            }
            _ => {
                let slot = &mut self.node_grads[node.0];
                let fresh = slot.is_none();
                let m = slot.get_or_insert_with(|| {
                    let (r, c) = tape.value(node).shape();
                    Matrix::zeros(r, c)
                });
                f(m.as_mut_slice(), fresh);
            }
        }
    }
}

/// `buf (+)= xᵀ·g` where `x` is n x k and `g` is n x m.
fn outer_accumulate(x: &Matrix, g: &Matrix, buf: &mut [f64], fresh: bool) {
    let m = g.cols();
    if fresh && x.rows() == 1 {
        for (row, &xi) in buf.chunks_exact_mut(m.max(1)).zip(x.as_slice()) {
            for (d, &gj) in row.iter_mut().zip(g.as_slice()) {
                *d = xi * gj;
            }
        }
        return;
    }
    if fresh {
        buf.fill(0.0);
    }
    for r in 0..x.rows() {
        let g_row = g.row(r);
        for (row, &xi) in buf.chunks_exact_mut(m.max(1)).zip(x.row(r)) {
            if xi != 0.0 {
                axpy(xi, g_row, row);
            }
        }
    }
}

/// `buf += g·wᵀ` where `g` is n x m and `w` is k x m.
fn grad_times_transpose(g: &Matrix, w: &Matrix, buf: &mut [f64]) {
    let k = w.rows();
    for r in 0..g.rows() {
        let g_row = g.row(r);
        let out = &mut buf[r * k..(r + 1) * k];
        for (i, o) in out.iter_mut().enumerate() {
            *o += dot(g_row, w.row(i));
        }
    }
}
