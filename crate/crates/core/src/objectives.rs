//! The two training objectives and the problems they are evaluated on.
//!
//! On the toy super-resolution task `f1` is the L1 pixel loss and `f2` is a
//! feature-space MSE through a frozen random network plus `alpha` times the
//! non-saturating generator loss of a discriminator. Two analytic problems
//! with closed-form Pareto fronts are provided for exact-gradient runs.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{init_mlp, mlp_apply, Activation, FlatParams, MlpSpec};
use crate::rng;
use crate::tensor::{Graph, NodeId, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectiveValues {
    pub fn is_finite(&self) -> bool {
        self.f1.is_finite() && self.f2.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveConfig {
    /// Weight of the adversarial term inside `f2`.
    pub alpha: f64,
    pub feature_seed: u64,
    pub feature_spec: MlpSpec,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            alpha: 0.005,
            feature_seed: 17,
            feature_spec: MlpSpec {
                widths: vec![32, 48, 24],
                hidden: Activation::leaky(),
                output: Activation::leaky(),
            },
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid(format!("alpha {} must be nonnegative", self.alpha)));
        }
        self.feature_spec.validate()
    }
}

/// The frozen feature extractor behind the perceptual proxy.
#[derive(Debug, Clone)]
pub struct FeatureNet {
    pub spec: MlpSpec,
    pub params: FlatParams,
}

impl FeatureNet {
    pub fn new(config: &ObjectiveConfig) -> Result<Self> {
        Ok(Self {
            spec: config.feature_spec.clone(),
            params: init_mlp(&config.feature_spec, config.feature_seed)?,
        })
    }

    /// Feature-space MSE between `pred` and `target` nodes.
    pub fn distance(&self, g: &mut Graph, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let fp = mlp_apply(&self.params, &self.spec, pred, g)?.output;
        let ft = mlp_apply(&self.params, &self.spec, target, g)?.output;
        g.mean_sq_error(fp, ft)
    }
}

fn same_shape(kind: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            kind,
            shapes: vec![a.shape().to_vec(), b.shape().to_vec()],
        });
    }
    Ok(())
}

/// Mean absolute error over all elements.
pub fn pixel_loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    same_shape("pixel_loss", pred, target)?;
    let mut g = Graph::new();
    let (p, t) = (g.input(pred.clone()), g.input(target.clone()));
    let l = g.mean_abs_error(p, t)?;
    g.scalar(l)
}

pub fn perceptual_proxy(pred: &Tensor, target: &Tensor, config: &ObjectiveConfig) -> Result<f64> {
    same_shape("perceptual_proxy", pred, target)?;
    let net = FeatureNet::new(config)?;
    let mut g = Graph::new();
    let (p, t) = (g.input(pred.clone()), g.input(target.clone()));
    let l = net.distance(&mut g, p, t)?;
    g.scalar(l)
}

/// Generator loss node `mean softplus(-D(pred))`.
pub fn gen_adv_node(g: &mut Graph, disc: &FlatParams, disc_spec: &MlpSpec, pred: NodeId) -> Result<NodeId> {
    let logits = mlp_apply(disc, disc_spec, pred, g)?.output;
    g.logistic_loss(logits, true)
}

/// Discriminator loss node on constant `pred`/`real` nodes, with the
/// discriminator's parameter leaves in layout order.
pub fn disc_loss_node(
    g: &mut Graph,
    disc: &FlatParams,
    disc_spec: &MlpSpec,
    pred: NodeId,
    real: NodeId,
) -> Result<(NodeId, Vec<NodeId>)> {
    let real_nodes = mlp_apply(disc, disc_spec, real, g)?;
    let l_real = g.logistic_loss(real_nodes.output, true)?;
    // Evaluating the fake batch reuses the same parameter leaves so the two
    // halves accumulate into one gradient.
    let fake_logits = apply_with_leaves(g, disc_spec, pred, &real_nodes.params)?;
    let l_fake = g.logistic_loss(fake_logits, false)?;
    Ok((g.add(l_real, l_fake)?, real_nodes.params))
}

/// Runs an MLP whose parameters are already graph leaves.
pub fn apply_with_leaves(g: &mut Graph, spec: &MlpSpec, input: NodeId, leaves: &[NodeId]) -> Result<NodeId> {
    let n = spec.n_layers();
    if leaves.len() != 2 * n {
        return Err(Error::Layout(format!("{} leaves for {n} layers", leaves.len())));
    }
    let mut x = input;
    for i in 0..n {
        x = g.matmul(x, leaves[2 * i])?;
        x = g.add(x, leaves[2 * i + 1])?;
        let act = if i + 1 == n { spec.output } else { spec.hidden };
        x = act.apply(g, x)?;
    }
    Ok(x)
}

/// `(gen_loss, disc_loss)` of the non-saturating logistic GAN objective.
pub fn adversarial_losses(disc: &FlatParams, disc_spec: &MlpSpec, pred: &Tensor, real: &Tensor) -> Result<(f64, f64)> {
    same_shape("adversarial_losses", pred, real)?;
    let mut g = Graph::new();
    let p = g.input(pred.clone());
    let r = g.input(real.clone());
    let gen = gen_adv_node(&mut g, disc, disc_spec, p)?;
    let (dl, _) = disc_loss_node(&mut g, disc, disc_spec, p, r)?;
    Ok((g.scalar(gen)?, g.scalar(dl)?))
}

/// `perceptual_proxy + alpha · gen_loss`.
pub fn composite_f2(
    pred: &Tensor,
    target: &Tensor,
    disc: &FlatParams,
    disc_spec: &MlpSpec,
    config: &ObjectiveConfig,
) -> Result<f64> {
    let percep = perceptual_proxy(pred, target, config)?;
    let (gen, _) = adversarial_losses(disc, disc_spec, pred, target)?;
    Ok(percep + config.alpha * gen)
}

/// Input/target pairs, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBatch {
    pub inputs: Tensor,
    pub targets: Tensor,
}

impl EvalBatch {
    pub fn new(inputs: Tensor, targets: Tensor) -> Result<Self> {
        if inputs.shape().len() != 2 || targets.shape().len() != 2 || inputs.rows() != targets.rows() {
            return Err(Error::ShapeMismatch {
                kind: "eval_batch",
                shapes: vec![inputs.shape().to_vec(), targets.shape().to_vec()],
            });
        }
        if !(inputs.all_finite() && targets.all_finite()) {
            return Err(Error::NonFinite("eval batch entries".into()));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows `idx` in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let pick = |t: &Tensor| {
            let cols = t.cols();
            let data = idx.iter().flat_map(|&i| t.row(i).iter().copied()).collect();
            Tensor::matrix(idx.len(), cols, data)
        };
        Self::new(pick(&self.inputs)?, pick(&self.targets)?)
    }

    /// `size` rows drawn without replacement (all rows if `size >= len`).
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Self> {
        let size = size.min(self.len());
        let idx = sample(rng, self.len(), size).into_vec();
        self.select(&idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySrDataset {
    pub train: EvalBatch,
    pub validation: EvalBatch,
    pub eval: EvalBatch,
}

pub fn block_mean(hr: &[f64], factor: usize) -> Vec<f64> {
    hr.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

fn piecewise_signal<R: Rng + ?Sized>(rng: &mut R, d_hr: usize) -> Vec<f64> {
    let segments = rng.random_range(4..=8usize).min(d_hr);
    let mut cuts = sample(rng, d_hr - 1, segments - 1).into_vec();
    cuts.iter_mut().for_each(|c| *c += 1);
    cuts.sort_unstable();
    cuts.push(d_hr);
    let noise = Normal::new(0.0, 0.01).expect("positive std");
    let mut out = Vec::with_capacity(d_hr);
    let mut start = 0;
    for end in cuts {
        let level = rng.random_range(-1.0..=1.0);
        out.extend((start..end).map(|_| level + noise.sample(rng)));
        start = end;
    }
    out
}

/// Seeded piecewise-constant HR signals with block-mean LR inputs, split
/// 80/10/10 by sample order into train/validation/eval.
pub fn make_toy_sr_dataset(seed: u64, count: usize, d_hr: usize, factor: usize) -> Result<ToySrDataset> {
    if count < 10 {
        return Err(Error::invalid(format!("dataset needs at least 10 samples, got {count}")));
    }
    if factor == 0 || d_hr < 8 || !d_hr.is_multiple_of(factor) {
        return Err(Error::invalid(format!("d_hr {d_hr} with factor {factor}")));
    }
    let d_lr = d_hr / factor;
    let mut r = rng::stream(seed, &[rng::tag::DATASET]);
    let mut hr = Vec::with_capacity(count * d_hr);
    let mut lr = Vec::with_capacity(count * d_lr);
    for _ in 0..count {
        let s = piecewise_signal(&mut r, d_hr);
        lr.extend(block_mean(&s, factor));
        hr.extend(s);
    }
    let all = EvalBatch::new(Tensor::matrix(count, d_lr, lr)?, Tensor::matrix(count, d_hr, hr)?)?;
    let n_train = count * 8 / 10;
    let n_val = count / 10;
    let range = |a: usize, b: usize| all.select(&(a..b).collect::<Vec<_>>());
    Ok(ToySrDataset {
        train: range(0, n_train)?,
        validation: range(n_train, n_train + n_val)?,
        eval: range(n_train + n_val, count)?,
    })
}

/// Bi-objective test problems with known Pareto fronts.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticProblem {
    /// `f1 = ‖x−a‖²`, `f2 = ‖x−b‖²`.
    QuadraticPair { a: Vec<f64>, b: Vec<f64> },
    /// `u = σ(x)`, `g = 1 + 9·mean(u[1..])`, `f1 = u[0]`, `f2 = g·(1 − (u[0]/g)²)`.
    ConcaveFront { dim: usize },
}

/// Objective values with exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticEval {
    pub values: ObjectiveValues,
    pub grad_f1: Vec<f64>,
    pub grad_f2: Vec<f64>,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl AnalyticProblem {
    pub fn quadratic_pair(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::invalid("anchors must be nonempty and of equal length"));
        }
        if a == b {
            return Err(Error::invalid("anchors must be distinct"));
        }
        Ok(Self::QuadraticPair { a, b })
    }

    /// `a ~ N(0, I)` and `b = a + separation·u` for a uniform unit direction `u`.
    pub fn seeded_quadratic_pair(dim: usize, seed: u64, separation: f64) -> Result<Self> {
        if dim == 0 || !(separation > 0.0) {
            return Err(Error::invalid(format!("dimension {dim}, separation {separation}")));
        }
        let mut r = rng::stream(seed, &[rng::tag::PROBLEM]);
        let a: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let mut u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v *= separation / norm);
        let b = a.iter().zip(&u).map(|(x, d)| x + d).collect();
        Self::quadratic_pair(a, b)
    }

    pub fn concave_front(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("concave front needs dimension >= 2, got {dim}")));
        }
        Ok(Self::ConcaveFront { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::QuadraticPair { a, .. } => a.len(),
            Self::ConcaveFront { dim } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<AnalyticEval> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!("x has {} entries, problem has {}", x.len(), self.dim())));
        }
        Ok(match self {
            Self::QuadraticPair { a, b } => {
                let d1: Vec<f64> = x.iter().zip(a).map(|(x, a)| x - a).collect();
                let d2: Vec<f64> = x.iter().zip(b).map(|(x, b)| x - b).collect();
                AnalyticEval {
                    values: ObjectiveValues {
                        f1: d1.iter().map(|v| v * v).sum(),
                        f2: d2.iter().map(|v| v * v).sum(),
                    },
                    grad_f1: d1.iter().map(|v| 2.0 * v).collect(),
                    grad_f2: d2.iter().map(|v| 2.0 * v).collect(),
                }
            }
            Self::ConcaveFront { dim } => {
                let u: Vec<f64> = x.iter().map(|&v| logistic(v)).collect();
                let du: Vec<f64> = u.iter().map(|u| u * (1.0 - u)).collect();
                let rest = (*dim - 1) as f64;
                let g = 1.0 + 9.0 * u[1..].iter().sum::<f64>() / rest;
                let u1 = u[0];
                let f2 = g * (1.0 - (u1 / g).powi(2));
                let mut grad_f1 = vec![0.0; *dim];
                grad_f1[0] = du[0];
                let mut grad_f2 = vec![0.0; *dim];
                grad_f2[0] = -2.0 * u1 / g * du[0];
                let dg = 1.0 + (u1 / g).powi(2);
                for j in 1..*dim {
                    grad_f2[j] = dg * 9.0 / rest * du[j];
                }
                AnalyticEval {
                    values: ObjectiveValues { f1: u1, f2 },
                    grad_f1,
                    grad_f2,
                }
            }
        })
    }

    /// Point `t ∈ [0,1]` of the analytic Pareto front.
    pub fn pareto_point(&self, t: f64) -> Result<ObjectiveValues> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("t {t} outside [0,1]")));
        }
        Ok(match self {
            Self::QuadraticPair { a, b } => {
                let l: f64 = a.iter().zip(b).map(|(a, b)| (b - a) * (b - a)).sum();
                ObjectiveValues {
                    f1: t * t * l,
                    f2: (1.0 - t) * (1.0 - t) * l,
                }
            }
            Self::ConcaveFront { .. } => ObjectiveValues { f1: t, f2: 1.0 - t * t },
        })
    }

    /// `n` evenly spaced front samples, `t = 0, 1/(n−1), …, 1`.
    pub fn reference_front(&self, n: usize) -> Result<Vec<ObjectiveValues>> {
        if n < 2 {
            return Err(Error::invalid("reference front needs at least 2 samples"));
        }
        (0..n)
            .map(|i| self.pareto_point(i as f64 / (n - 1) as f64))
            .collect()
    }
}
