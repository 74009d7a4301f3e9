//! Dense `f64` tensors and a reverse-mode autodiff graph.
//!
//! A [`Graph`] is an append-only tape. Every node caches its forward value when
//! it is created, so evaluation order is the insertion order and operands always
//! precede their consumers. [`Graph::backward`] walks the tape in reverse and
//! accumulates gradients in a fixed order, which keeps results bit-reproducible.
//!
//! Only rank-0, rank-1 and rank-2 tensors are used in practice. Batches are rows.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::invalid(format!("zero-sized dimension in {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::invalid(format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.iter().all(|&d| d == 1)
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Option<f64> {
        self.is_scalar().then(|| self.data[0])
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Primitive operations recorded on the tape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// `[m,k] x [k,n] -> [m,n]`.
    Matmul,
    /// Elementwise sum of equal shapes, or `[m,n] + [n]` bias broadcast over rows.
    Add,
    LeakyRelu { slope: f64 },
    Sigmoid,
    /// Mean absolute difference of two equal-shape tensors; scalar output.
    MeanAbsError,
    /// Mean squared difference of two equal-shape tensors; scalar output.
    MeanSqError,
    /// Mean logistic loss of logits against a constant 0/1 target; scalar output.
    LogisticLoss { target: f64 },
    ScalarScale { factor: f64 },
    ScalarAdd { offset: f64 },
    /// Divides each consecutive group of `group` columns by the group sum.
    GroupNormalize { group: usize },
    /// Softmax over each consecutive group of `group` columns.
    GroupSoftmax { group: usize },
}

impl Primitive {
    /// Looks a primitive up by name. `attr` carries the single numeric attribute
    /// of the kinds that take one (slope, target, factor, offset, group size).
    pub fn parse(name: &str, attr: Option<f64>) -> Result<Self> {
        let need = |kind: &'static str| {
            attr.ok_or_else(|| Error::InvalidAttr {
                kind,
                detail: "missing attribute".into(),
            })
        };
        let p = match name {
            "matmul" => Primitive::Matmul,
            "add" => Primitive::Add,
            "leaky_relu" => Primitive::LeakyRelu {
                slope: attr.unwrap_or(DEFAULT_SLOPE),
            },
            "sigmoid" => Primitive::Sigmoid,
            "mean_abs_error" => Primitive::MeanAbsError,
            "mean_sq_error" => Primitive::MeanSqError,
            "logistic_loss_with_logits" => Primitive::LogisticLoss {
                target: need("logistic_loss_with_logits")?,
            },
            "scalar_scale" => Primitive::ScalarScale {
                factor: need("scalar_scale")?,
            },
            "scalar_add" => Primitive::ScalarAdd {
                offset: need("scalar_add")?,
            },
            "group_normalize" => Primitive::GroupNormalize {
                group: need("group_normalize")? as usize,
            },
            "group_softmax" => Primitive::GroupSoftmax {
                group: need("group_softmax")? as usize,
            },
            other => return Err(Error::UnknownKind(other.to_string())),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Matmul => "matmul",
            Primitive::Add => "add",
            Primitive::LeakyRelu { .. } => "leaky_relu",
            Primitive::Sigmoid => "sigmoid",
            Primitive::MeanAbsError => "mean_abs_error",
            Primitive::MeanSqError => "mean_sq_error",
            Primitive::LogisticLoss { .. } => "logistic_loss_with_logits",
            Primitive::ScalarScale { .. } => "scalar_scale",
            Primitive::ScalarAdd { .. } => "scalar_add",
            Primitive::GroupNormalize { .. } => "group_normalize",
            Primitive::GroupSoftmax { .. } => "group_softmax",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Primitive::Matmul | Primitive::Add | Primitive::MeanAbsError | Primitive::MeanSqError => 2,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |detail: String| Error::InvalidAttr {
            kind: self.name(),
            detail,
        };
        match *self {
            Primitive::LeakyRelu { slope } if !(slope > 0.0 && slope < 1.0) => {
                Err(bad(format!("slope {slope} outside (0,1)")))
            }
            Primitive::LogisticLoss { target } if target != 0.0 && target != 1.0 => {
                Err(bad(format!("target {target} not in {{0,1}}")))
            }
            Primitive::ScalarScale { factor } if !factor.is_finite() => {
                Err(bad(format!("factor {factor}")))
            }
            Primitive::ScalarAdd { offset } if !offset.is_finite() => {
                Err(bad(format!("offset {offset}")))
            }
            Primitive::GroupNormalize { group } | Primitive::GroupSoftmax { group } if group == 0 => {
                Err(bad("group size 0".into()))
            }
            _ => Ok(()),
        }
    }
}

pub const DEFAULT_SLOPE: f64 = 0.2;

#[derive(Debug, Clone)]
enum NodeKind {
    Input,
    Op(Primitive),
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    operands: Vec<NodeId>,
    value: Tensor,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of one backward pass, indexed by node id. Nodes that do not feed
/// the differentiated output have no entry.
#[derive(Debug, Clone)]
pub struct GradientMap {
    grads: Vec<Option<Tensor>>,
}

impl GradientMap {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient data for `id`, or zeros of length `len` if it received none.
    pub fn data_or_zeros(&self, id: NodeId, len: usize) -> Vec<f64> {
        match self.get(id) {
            Some(t) => t.data().to_vec(),
            None => vec![0.0; len],
        }
    }

    /// Concatenates the gradients of several leaves, e.g. the per-layer
    /// parameter nodes of one model, into a single flat vector.
    pub fn concat(&self, ids: &[NodeId], lens: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(lens.iter().sum());
        for (&id, &len) in ids.iter().zip(lens) {
            match self.get(id) {
                Some(t) => out.extend_from_slice(t.data()),
                None => out.extend(std::iter::repeat_n(0.0, len)),
            }
        }
        out
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
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

    /// Adds a leaf holding `value`.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            kind: NodeKind::Input,
            operands: Vec::new(),
            value,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> Result<&Tensor> {
        self.nodes
            .get(id.0)
            .map(|n| &n.value)
            .ok_or(Error::UnknownNode(id.0))
    }

    /// Scalar value of a node.
    pub fn scalar(&self, id: NodeId) -> Result<f64> {
        let v = self.value(id)?;
        v.item().ok_or_else(|| Error::NonScalarLoss(v.shape().to_vec()))
    }

    /// Appends `kind` applied to `operands` and returns the new node.
    pub fn apply(&mut self, kind: Primitive, operands: &[NodeId]) -> Result<NodeId> {
        kind.validate()?;
        if operands.len() != kind.arity() {
            return Err(Error::InvalidAttr {
                kind: kind.name(),
                detail: format!("expected {} operands, got {}", kind.arity(), operands.len()),
            });
        }
        for &o in operands {
            if o.0 >= self.nodes.len() {
                return Err(Error::UnknownNode(o.0));
            }
        }
        let value = self.forward(kind, operands)?;
        self.nodes.push(Node {
            kind: NodeKind::Op(kind),
            operands: operands.to_vec(),
            value,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Primitive::Matmul, &[a, b])
    }
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Primitive::Add, &[a, b])
    }
    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> Result<NodeId> {
        self.apply(Primitive::LeakyRelu { slope }, &[x])
    }
    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        self.apply(Primitive::Sigmoid, &[x])
    }
    pub fn mean_abs_error(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Primitive::MeanAbsError, &[a, b])
    }
    pub fn mean_sq_error(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Primitive::MeanSqError, &[a, b])
    }
    pub fn logistic_loss(&mut self, logits: NodeId, target: bool) -> Result<NodeId> {
        let target = if target { 1.0 } else { 0.0 };
        self.apply(Primitive::LogisticLoss { target }, &[logits])
    }
    pub fn scale(&mut self, x: NodeId, factor: f64) -> Result<NodeId> {
        self.apply(Primitive::ScalarScale { factor }, &[x])
    }
    pub fn add_scalar(&mut self, x: NodeId, offset: f64) -> Result<NodeId> {
        self.apply(Primitive::ScalarAdd { offset }, &[x])
    }
    pub fn group_normalize(&mut self, x: NodeId, group: usize) -> Result<NodeId> {
        self.apply(Primitive::GroupNormalize { group }, &[x])
    }
    pub fn group_softmax(&mut self, x: NodeId, group: usize) -> Result<NodeId> {
        self.apply(Primitive::GroupSoftmax { group }, &[x])
    }

    fn forward(&self, kind: Primitive, ops: &[NodeId]) -> Result<Tensor> {
        let a = &self.nodes[ops[0].0].value;
        let mismatch = |shapes: Vec<&Tensor>| Error::ShapeMismatch {
            kind: kind.name(),
            shapes: shapes.iter().map(|t| t.shape.clone()).collect(),
        };
        let out = match kind {
            Primitive::Matmul => {
                let b = &self.nodes[ops[1].0].value;
                if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
                    return Err(mismatch(vec![a, b]));
                }
                let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
                Tensor {
                    shape: vec![m, n],
                    data: matmul_raw(&a.data, &b.data, m, k, n),
                }
            }
            Primitive::Add => {
                let b = &self.nodes[ops[1].0].value;
                if a.shape == b.shape {
                    Tensor {
                        shape: a.shape.clone(),
                        data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
                    }
                } else if a.shape.len() == 2 && b.shape.len() == 1 && a.shape[1] == b.shape[0] {
                    let n = b.shape[0];
                    Tensor {
                        shape: a.shape.clone(),
                        data: a
                            .data
                            .iter()
                            .enumerate()
                            .map(|(i, x)| x + b.data[i % n])
                            .collect(),
                    }
                } else {
                    return Err(mismatch(vec![a, b]));
                }
            }
            Primitive::LeakyRelu { slope } => a.map(|x| if x >= 0.0 { x } else { slope * x }),
            Primitive::Sigmoid => a.map(sigmoid),
            Primitive::MeanAbsError | Primitive::MeanSqError => {
                let b = &self.nodes[ops[1].0].value;
                if a.shape != b.shape {
                    return Err(mismatch(vec![a, b]));
                }
                let n = a.data.len() as f64;
                let s: f64 = a
                    .data
                    .iter()
                    .zip(&b.data)
                    .map(|(x, y)| {
                        let d = x - y;
                        if kind == Primitive::MeanAbsError {
                            d.abs()
                        } else {
                            d * d
                        }
                    })
                    .sum();
                Tensor::scalar(s / n)
            }
            Primitive::LogisticLoss { target } => {
                let n = a.data.len() as f64;
                let s: f64 = a.data.iter().map(|&x| softplus(x) - target * x).sum();
                Tensor::scalar(s / n)
            }
            Primitive::ScalarScale { factor } => a.map(|x| factor * x),
            Primitive::ScalarAdd { offset } => a.map(|x| x + offset),
            Primitive::GroupNormalize { group } | Primitive::GroupSoftmax { group } => {
                if a.shape.len() != 2 || !a.shape[1].is_multiple_of(group) {
                    return Err(mismatch(vec![a]));
                }
                let mut data = a.data.clone();
                for chunk in data.chunks_mut(group) {
                    if let Primitive::GroupSoftmax { .. } = kind {
                        let mx = chunk.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        chunk.iter_mut().for_each(|v| *v = (*v - mx).exp());
                    }
                    let s: f64 = chunk.iter().sum();
                    if s == 0.0 || !s.is_finite() {
                        return Err(Error::NonFinite(format!(
                            "{}: group sum {s}",
                            kind.name()
                        )));
                    }
                    chunk.iter_mut().for_each(|v| *v /= s);
                }
                Tensor {
                    shape: a.shape.clone(),
                    data,
                }
            }
        };
        Ok(out)
    }

    /// Gradients of the scalar node `loss` with respect to every node.
    pub fn backward(&self, loss: NodeId) -> Result<GradientMap> {
        let v = self.value(loss)?;
        if !v.is_scalar() {
            return Err(Error::NonScalarLoss(v.shape.clone()));
        }
        let seed = Tensor {
            shape: v.shape.clone(),
            data: vec![1.0],
        };
        self.backward_seeded(loss, seed)
    }

    /// Vector-Jacobian product: propagates `seed` (shaped like `output`) back
    /// through the tape.
    pub fn backward_seeded(&self, output: NodeId, seed: Tensor) -> Result<GradientMap> {
        let out_shape = &self.value(output)?.shape;
        if *out_shape != seed.shape {
            return Err(Error::ShapeMismatch {
                kind: "backward",
                shapes: vec![out_shape.clone(), seed.shape.clone()],
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(seed);
        for id in (0..=output.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if let NodeKind::Op(kind) = node.kind {
                let contributions = self.local_grads(kind, &node.operands, &node.value, &g);
                for (&op, c) in node.operands.iter().zip(contributions) {
                    match &mut grads[op.0] {
                        Some(acc) => acc.data.iter_mut().zip(&c.data).for_each(|(a, b)| *a += b),
                        slot @ None => *slot = Some(c),
                    }
                }
            }
            grads[id] = Some(g);
        }
        Ok(GradientMap { grads })
    }

    fn local_grads(&self, kind: Primitive, ops: &[NodeId], out: &Tensor, g: &Tensor) -> Vec<Tensor> {
        let a = &self.nodes[ops[0].0].value;
        let like = |t: &Tensor, data: Vec<f64>| Tensor {
            shape: t.shape.clone(),
            data,
        };
        match kind {
            Primitive::Matmul => {
                let b = &self.nodes[ops[1].0].value;
                let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
                let bt = transpose(&b.data, k, n);
                let da = matmul_raw(&g.data, &bt, m, n, k);
                let at = transpose(&a.data, m, k);
                let db = matmul_raw(&at, &g.data, k, m, n);
                vec![like(a, da), like(b, db)]
            }
            Primitive::Add => {
                let b = &self.nodes[ops[1].0].value;
                if a.shape == b.shape {
                    vec![g.clone(), g.clone()]
                } else {
                    let n = b.shape[0];
                    let mut db = vec![0.0; n];
                    for (i, v) in g.data.iter().enumerate() {
                        db[i % n] += v;
                    }
                    vec![g.clone(), like(b, db)]
                }
            }
            Primitive::LeakyRelu { slope } => {
                let d = a
                    .data
                    .iter()
                    .zip(&g.data)
                    .map(|(&x, &gv)| if x >= 0.0 { gv } else { slope * gv })
                    .collect();
                vec![like(a, d)]
            }
            Primitive::Sigmoid => {
                let d = out
                    .data
                    .iter()
                    .zip(&g.data)
                    .map(|(&y, &gv)| gv * y * (1.0 - y))
                    .collect();
                vec![like(a, d)]
            }
            Primitive::MeanAbsError | Primitive::MeanSqError => {
                let b = &self.nodes[ops[1].0].value;
                let scale = g.data[0] / a.data.len() as f64;
                let da: Vec<f64> = a
                    .data
                    .iter()
                    .zip(&b.data)
                    .map(|(x, y)| {
                        let d = x - y;
                        if kind == Primitive::MeanAbsError {
                            if d > 0.0 {
                                scale
                            } else if d < 0.0 {
                                -scale
                            } else {
                                0.0
                            }
                        } else {
                            2.0 * d * scale
                        }
                    })
                    .collect();
                let db = da.iter().map(|v| -v).collect();
                vec![like(a, da), like(b, db)]
            }
            Primitive::LogisticLoss { target } => {
                let scale = g.data[0] / a.data.len() as f64;
                let d = a.data.iter().map(|&x| scale * (sigmoid(x) - target)).collect();
                vec![like(a, d)]
            }
            Primitive::ScalarScale { factor } => vec![like(a, g.data.iter().map(|v| factor * v).collect())],
            Primitive::ScalarAdd { .. } => vec![g.clone()],
            Primitive::GroupNormalize { group } => {
                let mut d = vec![0.0; a.data.len()];
                for ((dc, xc), (yc, gc)) in d
                    .chunks_mut(group)
                    .zip(a.data.chunks(group))
                    .zip(out.data.chunks(group).zip(g.data.chunks(group)))
                {
                    let s: f64 = xc.iter().sum();
                    let dot: f64 = yc.iter().zip(gc).map(|(y, g)| y * g).sum();
                    for (o, gv) in dc.iter_mut().zip(gc) {
                        *o = (gv - dot) / s;
                    }
                }
                vec![like(a, d)]
            }
            Primitive::GroupSoftmax { group } => {
                let mut d = vec![0.0; a.data.len()];
                for (dc, (yc, gc)) in d
                    .chunks_mut(group)
                    .zip(out.data.chunks(group).zip(g.data.chunks(group)))
                {
                    let dot: f64 = yc.iter().zip(gc).map(|(y, g)| y * g).sum();
                    for ((o, y), gv) in dc.iter_mut().zip(yc).zip(gc) {
                        *o = y * (gv - dot);
                    }
                }
                vec![like(a, d)]
            }
        }
    }
}

/// Compares reverse-mode gradients with central differences.
///
/// `build` receives a fresh graph and the parameter leaf and must return the
/// scalar loss node. Returns the largest relative error over all parameters,
/// using the denominator `max(|analytic|, |numeric|, 1e-8)`. Leaky-ReLU inputs
/// exactly at 0 take the positive branch; callers should keep parameters away
/// from such kinks since central differences straddle them.
pub fn finite_diff_check<F>(build: F, params: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Graph, NodeId) -> Result<NodeId>,
{
    if !(step > 0.0) {
        return Err(Error::invalid(format!("finite-difference step {step} must be positive")));
    }
    let eval = |p: Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let leaf = g.input(p);
        let loss = build(&mut g, leaf)?;
        let v = g.scalar(loss)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("loss {v} at perturbed point")));
        }
        Ok(v)
    };
    let mut g = Graph::new();
    let leaf = g.input(params.clone());
    let loss = build(&mut g, leaf)?;
    let grads = g.backward(loss)?;
    let analytic = grads.data_or_zeros(leaf, params.len());
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = params.clone();
        plus.data[i] += step;
        let mut minus = params.clone();
        minus.data[i] -= step;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * step);
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn leaky_relu_negative_input() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(-1.0));
        let y = g.leaky_relu(x, 0.2).unwrap();
        assert!((g.scalar(y).unwrap() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn leaky_relu_kink_takes_positive_branch() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(0.0));
        let y = g.leaky_relu(x, 0.2).unwrap();
        let gr = g.backward(y).unwrap();
        assert_eq!(gr.get(x).unwrap().data()[0], 1.0);
    }

    #[test]
    fn sigmoid_at_zero_and_its_gradient() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(0.0));
        let y = g.sigmoid(x).unwrap();
        assert_eq!(g.scalar(y).unwrap(), 0.5);
        let gr = g.backward(y).unwrap();
        assert_eq!(gr.get(x).unwrap().data()[0], 0.25);
    }

    #[test]
    fn matmul_shape_rule() {
        let mut g = Graph::new();
        let a = g.input(Tensor::zeros(&[2, 3]));
        let b = g.input(Tensor::zeros(&[3, 4]));
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).unwrap().shape(), &[2, 4]);
        let err = g.matmul(b, b).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { kind: "matmul", .. }));
    }

    #[test]
    fn square_value_and_derivative() {
        let mut g = Graph::new();
        let x = g.input(t(&[1, 1], &[3.0]));
        let y = g.matmul(x, x).unwrap();
        assert_eq!(g.scalar(y).unwrap(), 9.0);
        let gr = g.backward(y).unwrap();
        assert_eq!(gr.get(x).unwrap().data()[0], 6.0);
    }

    #[test]
    fn mean_abs_error_example() {
        let mut g = Graph::new();
        let a = g.input(t(&[2], &[1.0, 3.0]));
        let b = g.input(t(&[2], &[0.0, 0.0]));
        let l = g.mean_abs_error(a, b).unwrap();
        assert_eq!(g.scalar(l).unwrap(), 2.0);
    }

    #[test]
    fn logistic_loss_at_zero_logit() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(0.0));
        let l = g.logistic_loss(x, true).unwrap();
        assert!((g.scalar(l).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn add_broadcasts_only_rank1_bias_over_rows() {
        let mut g = Graph::new();
        let x = g.input(t(&[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let b = g.input(t(&[3], &[10.0, 20.0, 30.0]));
        let y = g.add(x, b).unwrap();
        assert_eq!(g.value(y).unwrap().data(), &[11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
        let col = g.input(t(&[2], &[1.0, 1.0]));
        assert!(g.add(x, col).is_err());
        let wide = g.input(t(&[1, 3], &[1.0, 1.0, 1.0]));
        assert!(g.add(x, wide).is_err());
        assert!(g.add(b, x).is_err());
    }

    #[test]
    fn unknown_kind_and_bad_attrs_are_rejected() {
        assert!(matches!(Primitive::parse("conv2d", None), Err(Error::UnknownKind(_))));
        assert!(Primitive::parse("leaky_relu", Some(1.5)).is_err());
        assert!(Primitive::parse("logistic_loss_with_logits", Some(0.5)).is_err());
        assert_eq!(
            Primitive::parse("leaky_relu", None).unwrap(),
            Primitive::LeakyRelu { slope: 0.2 }
        );
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut g = Graph::new();
        let x = g.input(t(&[2], &[1.0, 2.0]));
        assert!(matches!(g.backward(x), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn unknown_node_is_an_error() {
        let g = Graph::new();
        assert!(matches!(g.value(NodeId(3)), Err(Error::UnknownNode(3))));
    }

    #[test]
    fn group_normalize_rows_sum_to_one() {
        let mut g = Graph::new();
        let x = g.input(t(&[1, 4], &[1.0, 3.0, 2.0, 2.0]));
        let y = g.group_normalize(x, 2).unwrap();
        assert_eq!(g.value(y).unwrap().data(), &[0.25, 0.75, 0.5, 0.5]);
    }

    #[test]
    fn quadratic_loss_gradient_is_exact() {
        let p = t(&[3], &[0.3, -1.2, 2.5]);
        let target = t(&[3], &[1.0, 0.5, -0.5]);
        let err = finite_diff_check(
            |g, x| {
                let c = g.input(target.clone());
                g.mean_sq_error(x, c)
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-9, "{err}");
    }

    type Builder<'a> = Box<dyn Fn(&mut Graph, NodeId) -> Result<NodeId> + 'a>;

    #[test]
    fn every_primitive_passes_gradient_check() {
        let p = t(&[2, 3], &[0.3, -1.2, 0.7, 1.1, -0.4, 0.9]);
        let w = t(&[3, 2], &[0.5, -0.2, 0.1, 0.8, -0.6, 0.3]);
        let bias = t(&[3], &[0.1, -0.3, 0.2]);
        let target = t(&[2, 3], &[0.5, 0.5, -0.5, 0.0, 1.0, 0.2]);
        let builders: Vec<Builder<'_>> = vec![
            Box::new(|g, x| {
                let w = g.input(w.clone());
                let y = g.matmul(x, w)?;
                let y = g.sigmoid(y)?;
                let z = g.input(Tensor::zeros(&[2, 2]));
                g.mean_sq_error(y, z)
            }),
            Box::new(|g, x| {
                let b = g.input(bias.clone());
                let y = g.add(x, b)?;
                let y = g.leaky_relu(y, 0.2)?;
                let c = g.input(target.clone());
                g.mean_abs_error(y, c)
            }),
            Box::new(|g, x| {
                let y = g.scale(x, 1.7)?;
                let y = g.add_scalar(y, 0.3)?;
                g.logistic_loss(y, false)
            }),
            Box::new(|g, x| {
                let y = g.sigmoid(x)?;
                let y = g.group_normalize(y, 3)?;
                let c = g.input(target.clone());
                g.mean_sq_error(y, c)
            }),
            Box::new(|g, x| {
                let y = g.group_softmax(x, 3)?;
                let c = g.input(target.clone());
                g.mean_sq_error(y, c)
            }),
        ];
        for (i, b) in builders.iter().enumerate() {
            let err = finite_diff_check(b, &p, 1e-5).unwrap();
            assert!(err < 1e-6, "builder {i}: {err}");
        }
    }

    #[test]
    fn seeded_backward_is_a_vector_jacobian_product() {
        let mut g = Graph::new();
        let x = g.input(t(&[1, 2], &[1.0, 2.0]));
        let y = g.scale(x, 3.0).unwrap();
        let gr = g
            .backward_seeded(y, t(&[1, 2], &[1.0, -1.0]))
            .unwrap();
        assert_eq!(gr.get(x).unwrap().data(), &[3.0, -3.0]);
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let build = || {
            let mut g = Graph::new();
            let x = g.input(t(&[2, 2], &[0.1, 0.2, -0.3, 0.4]));
            let y = g.matmul(x, x).unwrap();
            let y = g.sigmoid(y).unwrap();
            let z = g.input(Tensor::zeros(&[2, 2]));
            let l = g.mean_sq_error(y, z).unwrap();
            let gr = g.backward(l).unwrap();
            (g.scalar(l).unwrap().to_bits(), gr.get(x).unwrap().clone())
        };
        let (a, ga) = build();
        let (b, gb) = build();
        assert_eq!(a, b);
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ga), bits(&gb));
    }
}
