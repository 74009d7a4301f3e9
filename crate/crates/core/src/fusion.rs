//! Per-layer convex fusion of N expert generators.
//!
//! A regressor maps an LR input to an `L × N` weight matrix (one simplex row
//! per layout entry of the generator). It is trained against the weighted GAN
//! loss `α1·pixel + α2·perceptual + α3·adversarial` of the fused generator,
//! with the experts frozen and a fresh discriminator trained alongside. The
//! per-input matrices of M validation inputs are then averaged into universal
//! weights that define a single fused generator.
//!
//! The regressor is three dense leaky-ReLU layers, a mean pooling that averages
//! consecutive groups of features, then linear → leaky-ReLU → linear → sigmoid,
//! and finally each row is divided by its sum.

use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamHyper, AdamState};
use crate::config::FusionConfig;
use crate::driver::ToySrTask;
use crate::error::{Error, Result};
use crate::model::{mlp_apply, FlatParams, LayerLayout, MlpNodes, MlpSpec};
use crate::objectives::{apply_with_leaves, disc_loss_node, gen_adv_node, EvalBatch};
use crate::rng::{self, tag};
use crate::tensor::{Graph, NodeId, Tensor};

/// `L × N` matrix of convex weights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    n_layers: usize,
    n_experts: usize,
    data: Vec<f64>,
}

/// Average of per-input fusion weights.
pub type UniversalWeights = FusionWeights;

impl FusionWeights {
    pub fn new(n_layers: usize, n_experts: usize, data: Vec<f64>) -> Result<Self> {
        if n_layers == 0 || n_experts == 0 || data.len() != n_layers * n_experts {
            return Err(Error::invalid(format!(
                "{} weights for {n_layers} layers x {n_experts} experts",
                data.len()
            )));
        }
        Ok(Self {
            n_layers,
            n_experts,
            data,
        })
    }

    pub fn uniform(n_layers: usize, n_experts: usize) -> Self {
        Self {
            n_layers,
            n_experts,
            data: vec![1.0 / n_experts as f64; n_layers * n_experts],
        }
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.n_experts..(l + 1) * self.n_experts]
    }

    /// Largest deviation of a row sum from 1, or `None` if an entry lies
    /// outside `[0, 1]`.
    pub fn simplex_error(&self) -> Option<f64> {
        if self.data.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return None;
        }
        Some(
            (0..self.n_layers)
                .map(|l| (self.row(l).iter().sum::<f64>() - 1.0).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn is_simplex(&self, tol: f64) -> bool {
        self.simplex_error().is_some_and(|e| e <= tol)
    }

    /// Every row replaced by row `l`.
    pub fn broadcast_row(&self, l: usize) -> Self {
        let row = self.row(l).to_vec();
        Self {
            n_layers: self.n_layers,
            n_experts: self.n_experts,
            data: (0..self.n_layers).flat_map(|_| row.iter().copied()).collect(),
        }
    }

    /// Entrywise arithmetic mean, accumulated in index order.
    pub fn mean(items: &[FusionWeights]) -> Result<Self> {
        let first = items.first().ok_or_else(|| Error::invalid("mean of zero weight matrices"))?;
        let mut acc = vec![0.0; first.data.len()];
        for w in items {
            if w.n_layers != first.n_layers || w.n_experts != first.n_experts {
                return Err(Error::invalid("weight matrices of different sizes"));
            }
            acc.iter_mut().zip(&w.data).for_each(|(a, b)| *a += b);
        }
        let m = items.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        Self::new(first.n_layers, first.n_experts, acc)
    }
}

fn check_experts(experts: &[FlatParams]) -> Result<()> {
    let first = experts.first().ok_or_else(|| Error::invalid("no experts"))?;
    if experts.iter().any(|e| !e.same_layout(first)) {
        return Err(Error::Layout("experts have different layouts".into()));
    }
    Ok(())
}

/// `fused_l = Σ_k W[l,k]·expert_k,l` for every layout entry `l`.
pub fn assemble_fused(experts: &[FlatParams], weights: &FusionWeights) -> Result<FlatParams> {
    check_experts(experts)?;
    let layout = experts[0].layout();
    if weights.n_layers != layout.len() || weights.n_experts != experts.len() {
        return Err(Error::invalid(format!(
            "weights are {}x{} for {} layers and {} experts",
            weights.n_layers,
            weights.n_experts,
            layout.len(),
            experts.len()
        )));
    }
    for l in 0..weights.n_layers {
        let s: f64 = weights.row(l).iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("fusion row {l} sums to {s}")));
        }
    }
    Ok(assemble_unchecked(experts, layout, weights.data()))
}

fn assemble_unchecked(experts: &[FlatParams], layout: &[LayerLayout], w: &[f64]) -> FlatParams {
    let n = experts.len();
    let mut data = vec![0.0; experts[0].len()];
    for (l, lay) in layout.iter().enumerate() {
        let out = &mut data[lay.offset..lay.offset + lay.len];
        for (k, e) in experts.iter().enumerate() {
            let wk = w[l * n + k];
            for (o, &v) in out.iter_mut().zip(e.layer(lay)) {
                *o += wk * v;
            }
        }
    }
    experts[0].with_data(data).expect("convex combination of finite experts")
}

/// `G[l,k] = ⟨grad_l, expert_k,l⟩`, the gradient of a loss with respect to
/// the fusion weights given its gradient with respect to the fused vector.
fn weight_grad(experts: &[FlatParams], layout: &[LayerLayout], grad: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(layout.len() * experts.len());
    for lay in layout {
        let g = &grad[lay.offset..lay.offset + lay.len];
        for e in experts {
            out.push(g.iter().zip(e.layer(lay)).map(|(a, b)| a * b).sum());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub input_width: usize,
    pub feature_widths: [usize; 3],
    pub pooled_width: usize,
    pub mapping_hidden: usize,
    pub n_layers: usize,
    pub n_experts: usize,
    pub slope: f64,
}

impl RegressorSpec {
    pub fn new(config: &FusionConfig, input_width: usize, n_layers: usize, n_experts: usize, slope: f64) -> Result<Self> {
        let fw: [usize; 3] = config
            .feature_widths
            .as_slice()
            .try_into()
            .map_err(|_| Error::invalid("regressor needs three feature widths"))?;
        let s = Self {
            input_width,
            feature_widths: fw,
            pooled_width: config.pooled_width,
            mapping_hidden: config.mapping_hidden,
            n_layers,
            n_experts,
            slope,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.pooled_width == 0 || !self.feature_widths[2].is_multiple_of(self.pooled_width) {
            return Err(Error::invalid("pooled width must divide the last feature width"));
        }
        if self.n_layers == 0 || self.n_experts == 0 {
            return Err(Error::invalid("regressor output would be empty"));
        }
        Ok(())
    }

    pub fn output_width(&self) -> usize {
        self.n_layers * self.n_experts
    }

    fn feature_mlp(&self) -> MlpSpec {
        let h = crate::model::Activation::LeakyRelu { slope: self.slope };
        let mut widths = vec![self.input_width];
        widths.extend(self.feature_widths);
        MlpSpec {
            widths,
            hidden: h,
            output: h,
        }
    }

    fn mapping_mlp(&self) -> MlpSpec {
        MlpSpec {
            widths: vec![self.pooled_width, self.mapping_hidden, self.output_width()],
            hidden: crate::model::Activation::LeakyRelu { slope: self.slope },
            output: crate::model::Activation::Sigmoid,
        }
    }

    /// Constant `[features, pooled]` averaging matrix.
    fn pooling(&self) -> Tensor {
        let f = self.feature_widths[2];
        let group = f / self.pooled_width;
        let mut data = vec![0.0; f * self.pooled_width];
        for j in 0..f {
            data[j * self.pooled_width + j / group] = 1.0 / group as f64;
        }
        Tensor::matrix(f, self.pooled_width, data).expect("sizes match")
    }
}

/// Regressor parameters: the feature MLP followed by the mapping MLP, with
/// layer names prefixed `feature.` and `mapping.`.
pub fn init_regressor(spec: &RegressorSpec, seed: u64) -> Result<FlatParams> {
    let feat = crate::model::init_mlp(&spec.feature_mlp(), rng::derive_seed(seed, &[0]))?;
    let map = crate::model::init_mlp(&spec.mapping_mlp(), rng::derive_seed(seed, &[1]))?;
    let mut layers = Vec::new();
    for (prefix, p) in [("feature", feat), ("mapping", map)] {
        for (name, t) in p.to_layers()? {
            layers.push((format!("{prefix}.{name}"), t));
        }
    }
    FlatParams::from_layers(&layers)
}

/// Graph of the regressor on `input` (`[B, in]`). Returns the normalized
/// `[B, L·N]` weight node and the parameter leaves in layout order.
pub fn regressor_graph(params: &FlatParams, spec: &RegressorSpec, input: NodeId, g: &mut Graph) -> Result<(NodeId, Vec<NodeId>)> {
    let feat = spec.feature_mlp();
    let map = spec.mapping_mlp();
    let n_feat = 2 * feat.n_layers();
    let expected: Vec<usize> = feat
        .layout()
        .iter()
        .chain(map.layout().iter())
        .map(|l| l.len)
        .collect();
    let got: Vec<usize> = params.layout().iter().map(|l| l.len).collect();
    if expected != got {
        return Err(Error::Layout("regressor parameters do not match the spec".into()));
    }
    let in_shape = g.value(input)?.shape().to_vec();
    if in_shape.len() != 2 || in_shape[1] != spec.input_width {
        return Err(Error::ShapeMismatch {
            kind: "regressor",
            shapes: vec![in_shape, vec![spec.input_width]],
        });
    }
    let mut leaves = Vec::with_capacity(params.layout().len());
    for l in params.layout() {
        leaves.push(g.input(Tensor::new(l.shape.clone(), params.layer(l).to_vec())?));
    }
    let h = apply_with_leaves(g, &feat, input, &leaves[..n_feat])?;
    let pool = g.input(spec.pooling());
    let pooled = g.matmul(h, pool)?;
    let raw = apply_with_leaves(g, &map, pooled, &leaves[n_feat..])?;
    let w = g.group_normalize(raw, spec.n_experts)?;
    Ok((w, leaves))
}

/// Per-input fusion weights for every row of `inputs`.
pub fn regressor_forward(params: &FlatParams, spec: &RegressorSpec, inputs: &Tensor) -> Result<Vec<FusionWeights>> {
    let mut g = Graph::new();
    let x = g.input(inputs.clone());
    let (w, _) = regressor_graph(params, spec, x, &mut g)?;
    let out = g.value(w)?;
    (0..out.rows())
        .map(|i| FusionWeights::new(spec.n_layers, spec.n_experts, out.row(i).to_vec()))
        .collect()
}

/// Weighted GAN loss of one generator on `batch`, and its gradient with
/// respect to the generator parameters. Also returns the generator output.
fn gan_loss_grad(
    task: &ToySrTask,
    gen: &FlatParams,
    disc: &FlatParams,
    batch: &EvalBatch,
    config: &FusionConfig,
    scale: f64,
) -> Result<(f64, Vec<f64>, Tensor)> {
    let mut g = Graph::new();
    let x = g.input(batch.inputs.clone());
    let y = g.input(batch.targets.clone());
    let nodes = mlp_apply(gen, &task.gen_spec, x, &mut g)?;
    let pix = g.mean_abs_error(nodes.output, y)?;
    let pix = g.scale(pix, config.alpha1)?;
    let percep = task.features.distance(&mut g, nodes.output, y)?;
    let percep = g.scale(percep, config.alpha2)?;
    let adv = gen_adv_node(&mut g, disc, &task.disc_spec, nodes.output)?;
    let adv = g.scale(adv, config.alpha3)?;
    let loss = g.add(pix, percep)?;
    let loss = g.add(loss, adv)?;
    let loss = g.scale(loss, scale)?;
    let grad = g.backward(loss)?.concat(&nodes.params, &MlpNodes::lens(gen));
    Ok((g.scalar(loss)?, grad, g.value(nodes.output)?.clone()))
}

fn disc_step(task: &ToySrTask, disc: &mut FlatParams, state: &mut AdamState, fake: Tensor, real: &Tensor) -> Result<()> {
    let mut g = Graph::new();
    let p = g.input(fake);
    let r = g.input(real.clone());
    let (loss, leaves) = disc_loss_node(&mut g, disc, &task.disc_spec, p, r)?;
    let grad = g.backward(loss)?.concat(&leaves, &MlpNodes::lens(disc));
    adam_step(disc.data_mut(), &grad, state)
}

fn hyper(config: &FusionConfig) -> AdamHyper {
    AdamHyper {
        lr: config.lr,
        ..AdamHyper::default()
    }
}

/// Result of fusion training.
#[derive(Debug, Clone)]
pub struct TrainedRegressor {
    pub spec: RegressorSpec,
    pub params: FlatParams,
    pub disc: FlatParams,
    /// Mean training loss per epoch.
    pub losses: Vec<f64>,
}

pub fn regressor_spec(task: &ToySrTask, experts: &[FlatParams], config: &FusionConfig) -> Result<RegressorSpec> {
    check_experts(experts)?;
    let slope = match task.gen_spec.hidden {
        crate::model::Activation::LeakyRelu { slope } => slope,
        _ => crate::tensor::DEFAULT_SLOPE,
    };
    RegressorSpec::new(config, task.gen_spec.input_width(), experts[0].layout().len(), experts.len(), slope)
}

/// Trains the weight regressor with frozen experts.
pub fn train_regressor(task: &ToySrTask, experts: &[FlatParams], config: &FusionConfig) -> Result<TrainedRegressor> {
    let spec = regressor_spec(task, experts, config)?;
    let layout = experts[0].layout().to_vec();
    let mut params = init_regressor(&spec, config.seed)?;
    let mut state = AdamState::new(params.len(), hyper(config));
    let mut disc = crate::model::init_mlp(&task.disc_spec, rng::derive_seed(config.seed, &[tag::DISC_INIT]))?;
    let mut disc_state = AdamState::new(disc.len(), hyper(config));
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut r = rng::stream(config.seed, &[tag::FUSION, epoch as u64]);
        let mut total = 0.0;
        for step in 0..config.steps_per_epoch {
            let batch = task.data.train.sample(config.batch_size, &mut r)?;
            let b = batch.len();
            let mut g = Graph::new();
            let x = g.input(batch.inputs.clone());
            let (w_node, leaves) = regressor_graph(&params, &spec, x, &mut g)?;
            let w = g.value(w_node)?.clone();
            let mut seed = Vec::with_capacity(w.len());
            let mut fakes = Vec::with_capacity(batch.targets.len());
            let mut loss = 0.0;
            for i in 0..b {
                let fused = assemble_unchecked(experts, &layout, w.row(i));
                let one = batch.select(&[i])?;
                let (l, grad, fake) = gan_loss_grad(task, &fused, &disc, &one, config, 1.0 / b as f64)?;
                loss += l;
                seed.extend(weight_grad(experts, &layout, &grad));
                fakes.extend_from_slice(fake.data());
            }
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("fusion epoch {epoch}, batch {step}: loss {loss}")));
            }
            total += loss;
            let grads = g.backward_seeded(w_node, Tensor::matrix(b, spec.output_width(), seed)?)?;
            let grad = grads.concat(&leaves, &MlpNodes::lens(&params));
            adam_step(params.data_mut(), &grad, &mut state)?;
            let fake = Tensor::matrix(b, batch.targets.cols(), fakes)?;
            disc_step(task, &mut disc, &mut disc_state, fake, &batch.targets)?;
        }
        losses.push(total / config.steps_per_epoch as f64);
    }
    Ok(TrainedRegressor {
        spec,
        params,
        disc,
        losses,
    })
}

/// Mean of the per-input weights over `validation` and the fused generator.
pub fn universal_fuse(
    reg: &FlatParams,
    spec: &RegressorSpec,
    experts: &[FlatParams],
    validation: &Tensor,
) -> Result<(UniversalWeights, FlatParams)> {
    if validation.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    let per_input = regressor_forward(reg, spec, validation)?;
    let w = FusionWeights::mean(&per_input)?;
    let fused = assemble_fused(experts, &w)?;
    Ok((w, fused))
}

/// First `m` validation inputs.
pub fn validation_inputs(task: &ToySrTask, m: usize) -> Result<Tensor> {
    let v = &task.data.validation;
    let idx: Vec<usize> = (0..m.min(v.len())).collect();
    Ok(v.select(&idx)?.inputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    UniformAverage,
    SingleLayerBroadcast,
    LearnableWeight,
}

/// One directly optimized `L × N` weight matrix with softmax rows.
pub fn train_learnable_weights(task: &ToySrTask, experts: &[FlatParams], config: &FusionConfig) -> Result<FusionWeights> {
    check_experts(experts)?;
    let layout = experts[0].layout().to_vec();
    let (l, n) = (layout.len(), experts.len());
    let mut logits = vec![0.0; l * n];
    let mut state = AdamState::new(logits.len(), hyper(config));
    let mut disc = crate::model::init_mlp(&task.disc_spec, rng::derive_seed(config.seed, &[tag::DISC_INIT]))?;
    let mut disc_state = AdamState::new(disc.len(), hyper(config));
    for epoch in 0..config.epochs {
        let mut r = rng::stream(config.seed, &[tag::FUSION, epoch as u64]);
        for step in 0..config.steps_per_epoch {
            let batch = task.data.train.sample(config.batch_size, &mut r)?;
            let mut g = Graph::new();
            let z = g.input(Tensor::matrix(1, l * n, logits.clone())?);
            let w_node = g.group_softmax(z, n)?;
            let w = g.value(w_node)?.clone();
            let fused = assemble_unchecked(experts, &layout, w.data());
            let (loss, grad, fake) = gan_loss_grad(task, &fused, &disc, &batch, config, 1.0)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("learnable weights epoch {epoch}, batch {step}: loss {loss}")));
            }
            let seed = Tensor::matrix(1, l * n, weight_grad(experts, &layout, &grad))?;
            let dz = g.backward_seeded(w_node, seed)?.data_or_zeros(z, l * n);
            adam_step(&mut logits, &dz, &mut state)?;
            disc_step(task, &mut disc, &mut disc_state, fake, &batch.targets)?;
        }
    }
    let mut g = Graph::new();
    let z = g.input(Tensor::matrix(1, l * n, logits)?);
    let w = g.group_softmax(z, n)?;
    FusionWeights::new(l, n, g.value(w)?.data().to_vec())
}

/// Weights of a fusion baseline. `full` supplies the universal weights of the
/// full method, needed by the single-layer broadcast.
pub fn baseline_weights(
    mode: BaselineMode,
    task: &ToySrTask,
    experts: &[FlatParams],
    config: &FusionConfig,
    full: Option<&UniversalWeights>,
) -> Result<FusionWeights> {
    check_experts(experts)?;
    let l = experts[0].layout().len();
    match mode {
        BaselineMode::UniformAverage => Ok(FusionWeights::uniform(l, experts.len())),
        BaselineMode::SingleLayerBroadcast => match full {
            Some(w) => Ok(w.broadcast_row(0)),
            None => {
                let reg = train_regressor(task, experts, config)?;
                let val = validation_inputs(task, config.validation_inputs)?;
                let (w, _) = universal_fuse(&reg.params, &reg.spec, experts, &val)?;
                Ok(w.broadcast_row(0))
            }
        },
        BaselineMode::LearnableWeight => train_learnable_weights(task, experts, config),
    }
}

/// Fused generator of a baseline.
pub fn fuse_baseline(
    mode: BaselineMode,
    task: &ToySrTask,
    experts: &[FlatParams],
    config: &FusionConfig,
    full: Option<&UniversalWeights>,
) -> Result<FlatParams> {
    let w = baseline_weights(mode, task, experts, config, full)?;
    assemble_fused(experts, &w)
}
