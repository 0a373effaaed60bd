//! Dynamic reverse-mode tape.
//!
//! Every op evaluates eagerly and appends a node holding its value and the
//! handles of its inputs. Inputs always precede their consumers, so a single
//! reverse sweep over the node list is a valid topological order and visits
//! each node exactly once. `backward` consumes the graph; build a fresh one
//! for every forward pass.

use std::collections::HashMap;

use super::error::{NdError, Result};
use super::kernels::{self, gemm, numel};
use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    BatchMatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Softmax(Var),
    Sigmoid(Var),
    Tanh(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Concat { a: Var, b: Var, axis: usize },
    Select { x: Var, axis: usize, index: usize },
    Sum(Var),
    Mean(Var),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

/// Gradients produced by one backward sweep, indexed by [`Var`].
#[derive(Debug)]
pub struct Grads {
    grads: Vec<Option<Vec<f64>>>,
    params: HashMap<ParamId, Var>,
}

impl Grads {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient for a parameter that took part in the forward pass.
    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params.get(&id).and_then(|v| self.get(*v))
    }

    pub(crate) fn param_entries(&self) -> impl Iterator<Item = (ParamId, &[f64])> + '_ {
        self.params.iter().filter_map(|(id, v)| self.get(*v).map(|g| (*id, g)))
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

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<f64>, name: &'static str) -> Result<Var> {
        kernels::check_finite(name, &value)?;
        self.nodes.push(Node { shape, value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records an input value. Its gradient is still available from [`Grads`].
    pub fn input(&mut self, t: &Tensor) -> Var {
        self.nodes.push(Node {
            shape: t.shape().to_vec(),
            value: t.data().to_vec(),
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a parameter leaf; repeated requests reuse the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(v) = self.params.get(&id) {
            return *v;
        }
        let v = self.input(store.get(id));
        self.params.insert(id, v);
        v
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::from_parts_unchecked(n.shape.clone(), n.value.clone())
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn unary(&self, x: Var) -> (Vec<usize>, &[f64]) {
        let n = &self.nodes[x.0];
        (n.shape.clone(), &n.value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        let (shape, value) = kernels::matmul(&na.shape, &na.value, &nb.shape, &nb.value)?;
        self.push(Op::MatMul(a, b), shape, value, "matmul")
    }

    pub fn batch_matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        let (shape, value) = kernels::batch_matmul(&na.shape, &na.value, &nb.shape, &nb.value)?;
        self.push(Op::BatchMatMul(a, b), shape, value, "batch_matmul")
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let n = &self.nodes[x.0];
        let (shape, value) = kernels::transpose_last(&n.shape, &n.value)?;
        self.push(Op::Transpose(x), shape, value, "transpose")
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        kernels::check_rank(shape)?;
        let n = &self.nodes[x.0];
        if numel(shape) != n.value.len() {
            return Err(NdError::Shape {
                op: "reshape",
                lhs: n.shape.clone(),
                rhs: shape.to_vec(),
            });
        }
        let value = n.value.clone();
        self.push(Op::Reshape(x), shape.to_vec(), value, "reshape")
    }

    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let (shape, v) = self.unary(x);
        let value = kernels::softmax_last(&shape, v);
        self.push(Op::Softmax(x), shape, value, "softmax_rows")
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let (shape, v) = self.unary(x);
        let value = v.iter().map(|&t| kernels::sigmoid(t)).collect();
        self.push(Op::Sigmoid(x), shape, value, "sigmoid")
    }

    pub fn tanh_act(&mut self, x: Var) -> Result<Var> {
        let (shape, v) = self.unary(x);
        let value = v.iter().map(|t| t.tanh()).collect();
        self.push(Op::Tanh(x), shape, value, "tanh")
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        kernels::same_shape(name, &na.shape, &nb.shape)?;
        let value = na.value.iter().zip(&nb.value).map(|(&x, &y)| f(x, y)).collect();
        let shape = na.shape.clone();
        self.push(op, shape, value, name)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", Op::Sub(a, b), |x, y| x - y)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "hadamard", Op::Hadamard(a, b), |x, y| x * y)
    }

    /// `x + b`, with the rank-1 `b` broadcast over every leading index of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (nx, nb) = (&self.nodes[x.0], &self.nodes[b.0]);
        let cols = *nx.shape.last().expect("rank >= 1");
        if nb.shape.len() != 1 || nb.shape[0] != cols {
            return Err(NdError::Shape {
                op: "add_bias",
                lhs: nx.shape.clone(),
                rhs: nb.shape.clone(),
            });
        }
        let mut value = nx.value.clone();
        for row in value.chunks_exact_mut(cols) {
            row.iter_mut().zip(&nb.value).for_each(|(v, b)| *v += b);
        }
        let shape = nx.shape.clone();
        self.push(Op::AddBias(x, b), shape, value, "add_bias")
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let (shape, v) = self.unary(x);
        let value = v.iter().map(|t| t * c).collect();
        self.push(Op::Scale(x, c), shape, value, "scale")
    }

    pub fn concat(&mut self, a: Var, b: Var, axis: usize) -> Result<Var> {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        let (shape, value) = kernels::concat(&na.shape, &na.value, &nb.shape, &nb.value, axis)?;
        self.push(Op::Concat { a, b, axis }, shape, value, "concat")
    }

    pub fn select(&mut self, x: Var, axis: usize, index: usize) -> Result<Var> {
        let n = &self.nodes[x.0];
        let (shape, value) = kernels::select(&n.shape, &n.value, axis, index)?;
        self.push(Op::Select { x, axis, index }, shape, value, "select")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.nodes[x.0].value.iter().sum();
        self.push(Op::Sum(x), vec![1], vec![s], "sum")
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let v = &self.nodes[x.0].value;
        let m = v.iter().sum::<f64>() / v.len() as f64;
        self.push(Op::Mean(x), vec![1], vec![m], "mean")
    }

    /// Mean squared error between two same-shape values.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let d = self.sub(pred, target)?;
        let sq = self.hadamard(d, d)?;
        self.mean(sq)
    }

    /// Reverse sweep from a single-element `loss`.
    pub fn backward(self, loss: Var) -> Result<Grads> {
        let Graph { nodes, params } = self;
        if nodes[loss.0].value.len() != 1 {
            return Err(NdError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                nodes[loss.0].shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let (before, rest) = grads.split_at_mut(i);
            let Some(g) = rest[0].as_deref() else { continue };
            let node = &nodes[i];
            macro_rules! slot {
                ($v:expr) => {
                    grad_slot(before, &nodes, $v)
                };
            }
            match node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (sa, sb) = (&nodes[a.0].shape, &nodes[b.0].shape);
                    let (m, k, n) = (sa[0], sa[1], sb[1]);
                    let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
                    // dA = dC · Bᵀ, dB = Aᵀ · dC
                    gemm(m, n, k, g, n as isize, 1, vb, 1, n as isize, 1.0, slot!(a));
                    gemm(k, m, n, va, 1, k as isize, g, n as isize, 1, 1.0, slot!(b));
                }
                Op::BatchMatMul(a, b) => {
                    let (sa, sb) = (&nodes[a.0].shape, &nodes[b.0].shape);
                    let (bs, m, k, n) = (sa[0], sa[1], sa[2], sb[2]);
                    let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
                    for t in 0..bs {
                        let gt = &g[t * m * n..(t + 1) * m * n];
                        let bt = &vb[t * k * n..(t + 1) * k * n];
                        gemm(
                            m,
                            n,
                            k,
                            gt,
                            n as isize,
                            1,
                            bt,
                            1,
                            n as isize,
                            1.0,
                            &mut slot!(a)[t * m * k..(t + 1) * m * k],
                        );
                        let at = &va[t * m * k..(t + 1) * m * k];
                        gemm(
                            k,
                            m,
                            n,
                            at,
                            1,
                            k as isize,
                            gt,
                            n as isize,
                            1,
                            1.0,
                            &mut slot!(b)[t * k * n..(t + 1) * k * n],
                        );
                    }
                }
                Op::Transpose(x) => {
                    let (_, gt) = kernels::transpose_last(&node.shape, g)?;
                    add_into(slot!(x), &gt);
                }
                Op::Reshape(x) => add_into(slot!(x), g),
                Op::Softmax(x) => {
                    let cols = *node.shape.last().expect("rank >= 1");
                    let dst = slot!(x);
                    for ((y, gy), d) in node
                        .value
                        .chunks_exact(cols)
                        .zip(g.chunks_exact(cols))
                        .zip(dst.chunks_exact_mut(cols))
                    {
                        let dot: f64 = y.iter().zip(gy).map(|(a, b)| a * b).sum();
                        for j in 0..cols {
                            d[j] += y[j] * (gy[j] - dot);
                        }
                    }
                }
                Op::Sigmoid(x) => {
                    let dst = slot!(x);
                    for ((d, y), gy) in dst.iter_mut().zip(&node.value).zip(g) {
                        *d += gy * y * (1.0 - y);
                    }
                }
                Op::Tanh(x) => {
                    let dst = slot!(x);
                    for ((d, y), gy) in dst.iter_mut().zip(&node.value).zip(g) {
                        *d += gy * (1.0 - y * y);
                    }
                }
                Op::Add(a, b) => {
                    add_into(slot!(a), g);
                    add_into(slot!(b), g);
                }
                Op::Sub(a, b) => {
                    add_into(slot!(a), g);
                    slot!(b).iter_mut().zip(g).for_each(|(d, gy)| *d -= gy);
                }
                Op::Hadamard(a, b) => {
                    let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
                    let da: Vec<f64> = g.iter().zip(vb).map(|(gy, y)| gy * y).collect();
                    let db: Vec<f64> = g.iter().zip(va).map(|(gy, x)| gy * x).collect();
                    // a == b (squaring) must receive both contributions
                    add_into(slot!(a), &da);
                    add_into(slot!(b), &db);
                }
                Op::AddBias(x, b) => {
                    add_into(slot!(x), g);
                    let cols = nodes[b.0].value.len();
                    let db = slot!(b);
                    for row in g.chunks_exact(cols) {
                        add_into(db, row);
                    }
                }
                Op::Scale(x, c) => {
                    slot!(x).iter_mut().zip(g).for_each(|(d, gy)| *d += c * gy);
                }
                Op::Concat { a, b, axis } => {
                    let (outer, na, inner) = kernels::axis_blocks(&nodes[a.0].shape, axis);
                    let nb = nodes[b.0].shape[axis];
                    let (ba, bb) = (na * inner, nb * inner);
                    for o in 0..outer {
                        let src = &g[o * (ba + bb)..(o + 1) * (ba + bb)];
                        add_into(&mut slot!(a)[o * ba..(o + 1) * ba], &src[..ba]);
                        add_into(&mut slot!(b)[o * bb..(o + 1) * bb], &src[ba..]);
                    }
                }
                Op::Select { x, axis, index } => {
                    let (outer, len, inner) = kernels::axis_blocks(&nodes[x.0].shape, axis);
                    let dst = slot!(x);
                    for o in 0..outer {
                        let start = (o * len + index) * inner;
                        add_into(&mut dst[start..start + inner], &g[o * inner..(o + 1) * inner]);
                    }
                }
                Op::Sum(x) => {
                    let gy = g[0];
                    slot!(x).iter_mut().for_each(|d| *d += gy);
                }
                Op::Mean(x) => {
                    let n = nodes[x.0].value.len() as f64;
                    let gy = g[0] / n;
                    slot!(x).iter_mut().for_each(|d| *d += gy);
                }
            }
        }

        for g in grads.iter().flatten() {
            kernels::check_finite("backward", g)?;
        }
        Ok(Grads { grads, params })
    }
}

fn grad_slot<'a>(grads: &'a mut [Option<Vec<f64>>], nodes: &[Node], v: Var) -> &'a mut [f64] {
    let len = nodes[v.0].value.len();
    grads[v.0].get_or_insert_with(|| vec![0.0; len]).as_mut_slice()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}
