//! The computation record for reverse-mode differentiation.
//!
//! A [`Tape`] is built by one training step: leaves are registered with
//! [`Tape::param`] (differentiable) or [`Tape::constant`], every operation
//! appends a node, and [`Tape::backward`] consumes the tape to produce the
//! gradient of a scalar loss with respect to every differentiable leaf.
//! Node order is the construction order, which is always a valid topological
//! order because an operation can only refer to nodes that already exist.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use super::rng::RngStream;
use super::tensor::{matmul_dims, matmul_into, Tensor};
use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a node on a specific tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

impl Var {
    /// Position of the node in its record.
    pub fn tape_id(&self) -> usize {
        self.index
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Log(usize),
    Clamp(usize, f64, f64),
    Mean(usize),
    Sum(usize),
    Concat { inputs: Vec<usize>, axis: usize },
    Slice { input: usize, axis: usize, start: usize },
    Reshape(usize),
    Conv1d { input: usize, weight: usize, bias: usize, kernel: usize, stride: usize },
    Dropout { input: usize, mask: Vec<f64> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Log(_) => "log",
            Op::Clamp(..) => "clamp",
            Op::Mean(_) => "mean",
            Op::Sum(_) => "sum",
            Op::Concat { .. } => "concat",
            Op::Slice { .. } => "slice",
            Op::Reshape(_) => "reshape",
            Op::Conv1d { .. } => "conv1d",
            Op::Dropout { .. } => "dropout",
        }
    }

    fn inputs(&self) -> Vec<usize> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Relu(a)
            | Op::Log(a)
            | Op::Clamp(a, ..)
            | Op::Mean(a)
            | Op::Sum(a)
            | Op::Reshape(a) => vec![*a],
            Op::Concat { inputs, .. } => inputs.clone(),
            Op::Slice { input, .. } | Op::Dropout { input, .. } => vec![*input],
            Op::Conv1d { input, weight, bias, .. } => vec![*input, *weight, *bias],
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Single-writer record of one forward pass.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by [`Tape::backward`], one entry per differentiable leaf.
#[derive(Debug, Clone)]
pub struct Gradients {
    tape: u64,
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        if var.tape != self.tape {
            return None;
        }
        self.grads.get(var.index).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        if var.tape != self.tape {
            return None;
        }
        self.grads.get_mut(var.index).and_then(Option::take)
    }
}

#[derive(Serialize)]
struct NodeDump<'a> {
    id: usize,
    op: &'a str,
    inputs: Vec<usize>,
    shape: &'a [usize],
    requires_grad: bool,
}

fn same_or_suffix(lhs: &[usize], rhs: &[usize]) -> bool {
    let rn: usize = rhs.iter().product();
    if rn == 1 {
        return true;
    }
    rhs.len() <= lhs.len() && lhs[lhs.len() - rhs.len()..] == *rhs
}

fn strides_for(shape: &[usize], axis: usize) -> (usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, inner)
}

impl Tape {
    pub fn new() -> Self {
        Tape { id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed), nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var { tape: self.id, index: self.nodes.len() - 1 }
    }

    fn check(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.index >= self.nodes.len() {
            return Err(Error::invalid(format!("variable {} does not belong to this record", v.index)));
        }
        Ok(v.index)
    }

    fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let i = self.check(v).expect("variable from another record");
        &self.nodes[i].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn unary(&mut self, a: Var, op: impl FnOnce(usize) -> Op, f: impl Fn(f64) -> f64) -> Result<Var> {
        let i = self.check(a)?;
        let n = self.node(i);
        let value = n.value.map(f);
        let rg = n.requires_grad;
        Ok(self.push(value, op(i), rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        let (va, vb) = (&self.node(ia).value, &self.node(ib).value);
        let (n, k, m) = matmul_dims(va.shape(), vb.shape())?;
        let mut out = vec![0.0; n * m];
        matmul_into(va.data(), vb.data(), n, k, m, &mut out);
        let rg = self.node(ia).requires_grad || self.node(ib).requires_grad;
        Ok(self.push(Tensor::new(vec![n, m], out)?, Op::MatMul(ia, ib), rg))
    }

    fn broadcast_binary(
        &mut self,
        name: &str,
        a: Var,
        b: Var,
        op: fn(usize, usize) -> Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        let (va, vb) = (&self.node(ia).value, &self.node(ib).value);
        if !same_or_suffix(va.shape(), vb.shape()) {
            return Err(Error::shape(name, format!("cannot broadcast {:?} onto {:?}", vb.shape(), va.shape())));
        }
        let rb = vb.data();
        let lb = rb.len();
        let data = va.data().iter().enumerate().map(|(i, &x)| f(x, rb[i % lb])).collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        let rg = self.node(ia).requires_grad || self.node(ib).requires_grad;
        Ok(self.push(value, op(ia, ib), rg))
    }

    /// Element-wise sum; `b` may broadcast over the trailing dims of `a` or be a scalar.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_binary("add", a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_binary("sub", a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_binary("mul", a, b, Op::Mul, |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        self.unary(a, |i| Op::Scale(i, s), |x| x * s)
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.scale(a, -1.0)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Result<Var> {
        self.unary(a, Op::AddScalar, |x| x + s)
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Result<Var> {
        let n = self.neg(a)?;
        self.add_scalar(n, 1.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(a, Op::Sigmoid, sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(a, Op::Tanh, f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(a, Op::Relu, |x| x.max(0.0))
    }

    /// Natural log; any non-positive entry is a domain error.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        let i = self.check(a)?;
        if let Some((pos, x)) = self.node(i).value.data().iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
            return Err(Error::domain("log", format!("argument {x} at index {pos} is not positive")));
        }
        self.unary(a, Op::Log, f64::ln)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        self.unary(a, |i| Op::Clamp(i, lo, hi), |x| x.clamp(lo, hi))
    }

    /// Mean of all entries, as a scalar.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let i = self.check(a)?;
        let n = self.node(i);
        if n.value.is_empty() {
            return Err(Error::shape("mean", "empty tensor"));
        }
        let m = n.value.data().iter().sum::<f64>() / n.value.len() as f64;
        let rg = n.requires_grad;
        Ok(self.push(Tensor::scalar(m), Op::Mean(i), rg))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let i = self.check(a)?;
        let n = self.node(i);
        let s = n.value.data().iter().sum::<f64>();
        let rg = n.requires_grad;
        Ok(self.push(Tensor::scalar(s), Op::Sum(i), rg))
    }

    /// Concatenates along `axis`; all other dims must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::shape("concat", "no inputs"));
        }
        let idx: Vec<usize> = parts.iter().map(|&v| self.check(v)).collect::<Result<_>>()?;
        let first = self.node(idx[0]).value.shape().to_vec();
        if axis >= first.len() {
            return Err(Error::shape("concat", format!("axis {axis} out of range for {:?}", first)));
        }
        let mut total = 0;
        for &i in &idx {
            let s = self.node(i).value.shape();
            let compatible = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(d, (a, b))| d == axis || a == b);
            if !compatible {
                let shapes: Vec<_> = idx.iter().map(|&j| self.node(j).value.shape().to_vec()).collect();
                return Err(Error::shape("concat", format!("incompatible shapes {:?} on axis {axis}", shapes)));
            }
            total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = total;
        let (outer, inner) = strides_for(&shape, axis);
        let mut data = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for &i in &idx {
                let v = &self.node(i).value;
                let block = v.shape()[axis] * inner;
                data.extend_from_slice(&v.data()[o * block..(o + 1) * block]);
            }
        }
        let rg = idx.iter().any(|&i| self.node(i).requires_grad);
        Ok(self.push(Tensor::new(shape, data)?, Op::Concat { inputs: idx, axis }, rg))
    }

    /// Keeps `start..end` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, end: usize) -> Result<Var> {
        let i = self.check(a)?;
        let v = &self.node(i).value;
        let shape = v.shape();
        if axis >= shape.len() || start >= end || end > shape[axis] {
            return Err(Error::shape("slice", format!("range {start}..{end} on axis {axis} of {:?}", shape)));
        }
        let (outer, inner) = strides_for(shape, axis);
        let width = (end - start) * inner;
        let block = shape[axis] * inner;
        let mut data = Vec::with_capacity(outer * width);
        for o in 0..outer {
            let base = o * block + start * inner;
            data.extend_from_slice(&v.data()[base..base + width]);
        }
        let mut out_shape = shape.to_vec();
        out_shape[axis] = end - start;
        let rg = self.node(i).requires_grad;
        Ok(self.push(Tensor::new(out_shape, data)?, Op::Slice { input: i, axis, start }, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let i = self.check(a)?;
        let v = self.node(i).value.reshape(shape).map_err(|_| {
            Error::shape("reshape", format!("{:?} cannot become {:?}", self.node(i).value.shape(), shape))
        })?;
        let rg = self.node(i).requires_grad;
        Ok(self.push(v, Op::Reshape(i), rg))
    }

    /// 1-D convolution without padding.
    ///
    /// `input: [batch, length, channels]`, `weight: [kernel * channels, filters]`
    /// (row `k * channels + c`), `bias: [filters]`. Output is
    /// `[batch, (length - kernel) / stride + 1, filters]`.
    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Var, kernel: usize, stride: usize) -> Result<Var> {
        let (ii, iw, ib) = (self.check(input)?, self.check(weight)?, self.check(bias)?);
        let (x, w, b) = (&self.node(ii).value, &self.node(iw).value, &self.node(ib).value);
        let xs = x.shape();
        if kernel == 0 || stride == 0 {
            return Err(Error::shape("conv1d", "kernel and stride must be positive"));
        }
        if xs.len() != 3 || xs[1] < kernel {
            return Err(Error::shape("conv1d", format!("input {:?} too short for kernel {kernel}", xs)));
        }
        let (batch, len, ch) = (xs[0], xs[1], xs[2]);
        let ws = w.shape();
        if ws.len() != 2 || ws[0] != kernel * ch || b.shape() != [ws[1]] {
            return Err(Error::shape(
                "conv1d",
                format!("weight {:?} / bias {:?} do not fit kernel {kernel} x {ch} channels", ws, b.shape()),
            ));
        }
        let filters = ws[1];
        let out_len = (len - kernel) / stride + 1;
        let patch = kernel * ch;
        let mut out = vec![0.0; batch * out_len * filters];
        for bi in 0..batch {
            for t in 0..out_len {
                let start = (bi * len + t * stride) * ch;
                let src = &x.data()[start..start + patch];
                let dst = &mut out[(bi * out_len + t) * filters..(bi * out_len + t + 1) * filters];
                dst.copy_from_slice(b.data());
                for (p, &xv) in src.iter().enumerate() {
                    let wrow = &w.data()[p * filters..(p + 1) * filters];
                    for (o, &wv) in dst.iter_mut().zip(wrow) {
                        *o += xv * wv;
                    }
                }
            }
        }
        let rg = [ii, iw, ib].iter().any(|&i| self.node(i).requires_grad);
        let value = Tensor::new(vec![batch, out_len, filters], out)?;
        Ok(self.push(value, Op::Conv1d { input: ii, weight: iw, bias: ib, kernel, stride }, rg))
    }

    /// Inverted dropout: kept activations are scaled by `1 / (1 - rate)`.
    /// In eval mode (or with rate 0) the input is returned unchanged.
    pub fn dropout(&mut self, a: Var, rate: f64, mode: Mode, rng: &mut RngStream) -> Result<Var> {
        let i = self.check(a)?;
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate must lie in [0, 1), got {rate}")));
        }
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 - rate;
        let v = &self.node(i).value;
        let mask: Vec<f64> = (0..v.len()).map(|_| if rng.bernoulli(keep) { 1.0 / keep } else { 0.0 }).collect();
        let data = v.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let value = Tensor::new(v.shape().to_vec(), data)?;
        let rg = self.node(i).requires_grad;
        Ok(self.push(value, Op::Dropout { input: i, mask }, rg))
    }

    /// Node list as JSON, for debugging.
    pub fn to_debug_json(&self) -> String {
        let dump: Vec<NodeDump<'_>> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeDump {
                id,
                op: n.op.name(),
                inputs: n.op.inputs(),
                shape: n.value.shape(),
                requires_grad: n.requires_grad,
            })
            .collect();
        serde_json::to_string_pretty(&dump).expect("node dump serializes")
    }

    /// Reverse pass from a scalar `loss`. Consumes the record.
    ///
    /// Every differentiable leaf gets an entry; leaves the loss does not
    /// depend on get zeros.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        let li = self.check(loss)?;
        if self.nodes[li].value.len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.nodes[li].value.shape()),
            ));
        }
        let nodes = &self.nodes;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[li] = Some(vec![1.0]);

        fn acc<'a>(grads: &'a mut [Option<Vec<f64>>], nodes: &[Node], i: usize) -> Option<&'a mut Vec<f64>> {
            if !nodes[i].requires_grad {
                return None;
            }
            let len = nodes[i].value.len();
            Some(grads[i].get_or_insert_with(|| vec![0.0; len]))
        }

        for idx in (0..=li).rev() {
            let node = &nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let out = node.value.data();
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    let (n, k, m) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        // dA = G · Bᵀ
                        for i in 0..n {
                            let grow = &g[i * m..(i + 1) * m];
                            for p in 0..k {
                                let brow = &vb.data()[p * m..(p + 1) * m];
                                da[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                            }
                        }
                    }
                    if let Some(db) = acc(&mut grads, nodes, *b) {
                        // dB = Aᵀ · G
                        for i in 0..n {
                            let grow = &g[i * m..(i + 1) * m];
                            for p in 0..k {
                                let av = va.data()[i * k + p];
                                if av == 0.0 {
                                    continue;
                                }
                                for (d, &gv) in db[p * m..(p + 1) * m].iter_mut().zip(grow) {
                                    *d += av * gv;
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        da.iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                    }
                    if let Some(db) = acc(&mut grads, nodes, *b) {
                        let lb = db.len();
                        for (i, x) in g.iter().enumerate() {
                            db[i % lb] += sign * x;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (nodes[*a].value.data(), nodes[*b].value.data());
                    let lb = vb.len();
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        for (i, x) in g.iter().enumerate() {
                            da[i] += x * vb[i % lb];
                        }
                    }
                    if let Some(db) = acc(&mut grads, nodes, *b) {
                        for (i, x) in g.iter().enumerate() {
                            db[i % lb] += x * va[i];
                        }
                    }
                }
                Op::Scale(a, s) => {
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        da.iter_mut().zip(&g).for_each(|(d, x)| *d += s * x);
                    }
                }
                Op::AddScalar(a) | Op::Reshape(a) => {
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        da.iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                    }
                }
                Op::Sigmoid(a) => {
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        for ((d, x), y) in da.iter_mut().zip(&g).zip(out) {
                            *d += x * y * (1.0 - y);
                        }
                    }
                }
                Op::Tanh(a) => {
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        for ((d, x), y) in da.iter_mut().zip(&g).zip(out) {
                            *d += x * (1.0 - y * y);
                        }
                    }
                }
                Op::Relu(a) => {
                    let va = nodes[*a].value.data();
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        for ((d, x), v) in da.iter_mut().zip(&g).zip(va) {
                            if *v > 0.0 {
                                *d += x;
                            }
                        }
                    }
                }
                Op::Log(a) => {
                    let va = nodes[*a].value.data();
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        for ((d, x), v) in da.iter_mut().zip(&g).zip(va) {
                            *d += x / v;
                        }
                    }
                }
                Op::Clamp(a, lo, hi) => {
                    let va = nodes[*a].value.data();
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        for ((d, x), v) in da.iter_mut().zip(&g).zip(va) {
                            if *v >= *lo && *v <= *hi {
                                *d += x;
                            }
                        }
                    }
                }
                Op::Mean(a) | Op::Sum(a) => {
                    let n = nodes[*a].value.len() as f64;
                    let scale = if matches!(node.op, Op::Mean(_)) { g[0] / n } else { g[0] };
                    if let Some(da) = acc(&mut grads, nodes, *a) {
                        da.iter_mut().for_each(|d| *d += scale);
                    }
                }
                Op::Concat { inputs, axis } => {
                    let (outer, inner) = strides_for(node.value.shape(), *axis);
                    let total_block = node.value.shape()[*axis] * inner;
                    let mut offset = 0;
                    for &inp in inputs {
                        let block = nodes[inp].value.shape()[*axis] * inner;
                        if let Some(di) = acc(&mut grads, nodes, inp) {
                            for o in 0..outer {
                                let src = &g[o * total_block + offset..o * total_block + offset + block];
                                di[o * block..(o + 1) * block].iter_mut().zip(src).for_each(|(d, x)| *d += x);
                            }
                        }
                        offset += block;
                    }
                }
                Op::Slice { input, axis, start } => {
                    let in_shape = nodes[*input].value.shape().to_vec();
                    let (outer, inner) = strides_for(&in_shape, *axis);
                    let block = in_shape[*axis] * inner;
                    let width = node.value.shape()[*axis] * inner;
                    if let Some(di) = acc(&mut grads, nodes, *input) {
                        for o in 0..outer {
                            let base = o * block + start * inner;
                            di[base..base + width]
                                .iter_mut()
                                .zip(&g[o * width..(o + 1) * width])
                                .for_each(|(d, x)| *d += x);
                        }
                    }
                }
                Op::Conv1d { input, weight, bias, kernel, stride } => {
                    let xs = nodes[*input].value.shape().to_vec();
                    let (batch, len, ch) = (xs[0], xs[1], xs[2]);
                    let filters = nodes[*weight].value.shape()[1];
                    let out_len = node.value.shape()[1];
                    let patch = kernel * ch;
                    let x = nodes[*input].value.data();
                    let w = nodes[*weight].value.data();
                    if let Some(dw) = acc(&mut grads, nodes, *weight) {
                        for bi in 0..batch {
                            for t in 0..out_len {
                                let start = (bi * len + t * stride) * ch;
                                let grow = &g[(bi * out_len + t) * filters..(bi * out_len + t + 1) * filters];
                                for (p, &xv) in x[start..start + patch].iter().enumerate() {
                                    for (d, &gv) in dw[p * filters..(p + 1) * filters].iter_mut().zip(grow) {
                                        *d += xv * gv;
                                    }
                                }
                            }
                        }
                    }
                    if let Some(dbias) = acc(&mut grads, nodes, *bias) {
                        for row in g.chunks(filters) {
                            dbias.iter_mut().zip(row).for_each(|(d, x)| *d += x);
                        }
                    }
                    if let Some(dx) = acc(&mut grads, nodes, *input) {
                        for bi in 0..batch {
                            for t in 0..out_len {
                                let start = (bi * len + t * stride) * ch;
                                let grow = &g[(bi * out_len + t) * filters..(bi * out_len + t + 1) * filters];
                                for p in 0..patch {
                                    let wrow = &w[p * filters..(p + 1) * filters];
                                    dx[start + p] += grow.iter().zip(wrow).map(|(a, b)| a * b).sum::<f64>();
                                }
                            }
                        }
                    }
                }
                Op::Dropout { input, mask } => {
                    if let Some(di) = acc(&mut grads, nodes, *input) {
                        for ((d, x), m) in di.iter_mut().zip(&g).zip(mask) {
                            *d += x * m;
                        }
                    }
                }
            }
        }

        let grads = nodes
            .iter()
            .zip(grads)
            .map(|(n, g)| {
                if matches!(n.op, Op::Leaf) && n.requires_grad {
                    let data = g.unwrap_or_else(|| vec![0.0; n.value.len()]);
                    Some(Tensor::new(n.value.shape().to_vec(), data).expect("gradient matches leaf shape"))
                } else {
                    None
                }
            })
            .collect();
        Ok(Gradients { tape: self.id, grads })
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(3.0));
        let y = t.mul(x, x).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().item().unwrap(), 6.0);
    }

    #[test]
    fn log_sigmoid_derivative_at_zero() {
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(0.0));
        let s = t.sigmoid(x).unwrap();
        assert_eq!(t.value(s).item().unwrap(), 0.5);
        let l = t.log(s).unwrap();
        let g = t.backward(l).unwrap();
        assert!((g.get(x).unwrap().item().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_rejects_non_positive() {
        let mut t = Tape::new();
        let x = t.param(Tensor::vector(vec![1.0, 0.0]));
        let err = t.log(x).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn conv_output_length() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::zeros(&[1, 64, 1]));
        let w = t.param(Tensor::zeros(&[5, 2]));
        let b = t.param(Tensor::zeros(&[2]));
        let y = t.conv1d(x, w, b, 5, 4).unwrap();
        assert_eq!(t.shape(y), &[1, 15, 2]);
    }

    #[test]
    fn eval_dropout_is_identity() {
        let mut t = Tape::new();
        let mut rng = RngStream::new(0);
        let x = t.param(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let y = t.dropout(x, 0.4, Mode::Eval, &mut rng).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn unreachable_leaf_gets_zero() {
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(2.0));
        let z = t.param(Tensor::vector(vec![1.0, 1.0]));
        let y = t.mul(x, x).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(z).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut t = Tape::new();
        let x = t.param(Tensor::vector(vec![1.0, 2.0]));
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn foreign_loss_rejected() {
        let mut other = Tape::new();
        let y = other.param(Tensor::scalar(1.0));
        let t = Tape::new();
        assert!(t.backward(y).is_err());
    }

    #[test]
    fn shared_leaf_accumulates_both_paths() {
        // f = x*y + x  ->  df/dx = y + 1
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(2.0));
        let y = t.param(Tensor::scalar(5.0));
        let xy = t.mul(x, y).unwrap();
        let f = t.add(xy, x).unwrap();
        let g = t.backward(f).unwrap();
        assert_eq!(g.get(x).unwrap().item().unwrap(), 6.0);
        assert_eq!(g.get(y).unwrap().item().unwrap(), 2.0);
    }

    #[test]
    fn shape_errors_name_shapes() {
        let mut t = Tape::new();
        let a = t.param(Tensor::zeros(&[2, 3]));
        let b = t.param(Tensor::zeros(&[2, 2]));
        let e = t.add(a, b).unwrap_err().to_string();
        assert!(e.contains("[2, 2]") && e.contains("[2, 3]"), "{e}");
    }

    #[test]
    fn debug_dump_lists_nodes() {
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(1.0));
        t.tanh(x).unwrap();
        let json: serde_json::Value = serde_json::from_str(&t.to_debug_json()).unwrap();
        assert_eq!(json[1]["op"], "tanh");
        assert_eq!(json[1]["inputs"][0], 0);
    }
}
