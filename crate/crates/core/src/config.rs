//! Experiment configuration. Every field has a default, so an empty document
//! describes the reference experiment: N = 5, T = 100, T_adam = 10, T_ea = 1,
//! δ = 0.7, η = 20, σ² = 0.01, loss weights 0.01 / 1 / 0.005.

use serde::{Deserialize, Serialize};

use crate::adam::{AdamHyper, GradCombine};
use crate::error::{Error, Result};
use crate::evolution::EvoConfig;
use crate::objectives::ObjectiveConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub evo: EvoConfig,
    pub adam: AdamConfig,
    pub objective: ObjectiveConfig,
    pub problem: ProblemConfig,
    pub model: ModelConfig,
    pub fusion: FusionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Population size N.
    pub population: usize,
    /// Total epochs T.
    pub epochs: usize,
    /// Adam epochs per cycle.
    pub adam_epochs: usize,
    /// EA epochs per cycle.
    pub ea_epochs: usize,
    pub pretrain_epochs: usize,
    /// Gradient steps per epoch.
    pub inner_iterations: usize,
    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub eval_batch_seed: u64,
    pub master_seed: u64,
    pub grad_combine: GradCombine,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            population: 5,
            epochs: 100,
            adam_epochs: 10,
            ea_epochs: 1,
            pretrain_epochs: 20,
            inner_iterations: 50,
            batch_size: 16,
            eval_batch_size: 40,
            eval_batch_seed: 7,
            master_seed: 0,
            grad_combine: GradCombine::WeightedSum,
        }
    }
}

/// Adam hyperparameters. A missing `lr` resolves per problem kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        let h = AdamHyper::default();
        Self {
            lr: None,
            beta1: h.beta1,
            beta2: h.beta2,
            eps: h.eps,
        }
    }
}

impl AdamConfig {
    pub fn hyper(&self, kind: ProblemKind) -> AdamHyper {
        AdamHyper {
            lr: self.lr.unwrap_or(match kind {
                ProblemKind::ToySr => 1e-4,
                ProblemKind::QuadraticPair | ProblemKind::ConcaveFront => 1e-2,
            }),
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    #[default]
    ToySr,
    QuadraticPair,
    ConcaveFront,
}

/// Problem selection. Fields not used by `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Decision-vector length of the analytic problems.
    pub dimension: usize,
    /// Seed of the quadratic-pair anchors.
    pub seed: u64,
    /// Distance between the quadratic-pair anchors.
    pub separation: f64,
    pub samples: usize,
    pub d_hr: usize,
    pub factor: usize,
    pub dataset_seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: ProblemKind::ToySr,
            dimension: 16,
            seed: 0,
            separation: 0.5,
            samples: 4000,
            d_hr: 32,
            factor: 4,
            dataset_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub slope: f64,
    /// Seed of the fixed discriminator that scores `f2` in evaluations.
    pub judge_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            generator_hidden: vec![64, 64],
            discriminator_hidden: vec![32],
            slope: crate::tensor::DEFAULT_SLOPE,
            judge_seed: 23,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Validation inputs M averaged into the universal weights.
    pub validation_inputs: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub seed: u64,
    /// Widths of the three dense feature layers.
    pub feature_widths: Vec<usize>,
    /// Width after mean pooling; must divide the last feature width.
    pub pooled_width: usize,
    pub mapping_hidden: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            validation_inputs: 40,
            epochs: 20,
            steps_per_epoch: 25,
            batch_size: 16,
            lr: 1e-3,
            alpha1: 0.01,
            alpha2: 1.0,
            alpha3: 0.005,
            seed: 11,
            feature_widths: vec![32, 32, 32],
            pooled_width: 8,
            mapping_hidden: 16,
        }
    }
}

fn key_err(key: &str, detail: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        detail: detail.into(),
    }
}

fn positive(key: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(key_err(key, "must be at least 1"));
    }
    Ok(())
}

fn nonneg(key: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(key_err(key, format!("{v} must be a finite nonnegative number")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Range checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        if t.population < 2 {
            return Err(key_err("train.population", format!("{} < 2", t.population)));
        }
        positive("train.epochs", t.epochs)?;
        positive("train.adam_epochs", t.adam_epochs)?;
        positive("train.ea_epochs", t.ea_epochs)?;
        positive("train.inner_iterations", t.inner_iterations)?;
        positive("train.batch_size", t.batch_size)?;
        positive("train.eval_batch_size", t.eval_batch_size)?;

        let e = &self.evo;
        if !(e.eta > 0.0) {
            return Err(key_err("evo.eta", format!("{} must be positive", e.eta)));
        }
        nonneg("evo.sigma2", e.sigma2)?;
        if !(0.0..=1.0).contains(&e.delta) {
            return Err(key_err("evo.delta", format!("{} outside [0, 1]", e.delta)));
        }
        if e.n_nbr < 2 || e.n_nbr > t.population {
            return Err(key_err("evo.n_nbr", format!("{} outside [2, {}]", e.n_nbr, t.population)));
        }

        let a = &self.adam;
        if let Some(lr) = a.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(key_err("adam.lr", format!("{lr} must be positive")));
            }
        }
        for (k, v) in [("adam.beta1", a.beta1), ("adam.beta2", a.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(key_err(k, format!("{v} outside [0, 1)")));
            }
        }
        if !(a.eps > 0.0) {
            return Err(key_err("adam.eps", format!("{} must be positive", a.eps)));
        }

        nonneg("objective.alpha", self.objective.alpha)?;
        if self.objective.feature_spec.validate().is_err() {
            return Err(key_err("objective.feature_spec", "invalid network spec"));
        }

        let p = &self.problem;
        match p.kind {
            ProblemKind::QuadraticPair => {
                positive("problem.dimension", p.dimension)?;
                if !(p.separation > 0.0) {
                    return Err(key_err("problem.separation", format!("{} must be positive", p.separation)));
                }
            }
            ProblemKind::ConcaveFront => {
                if p.dimension < 2 {
                    return Err(key_err("problem.dimension", "concave front needs at least 2"));
                }
            }
            ProblemKind::ToySr => {
                if p.samples < 10 {
                    return Err(key_err("problem.samples", "need at least 10 samples"));
                }
                if p.factor == 0 || !p.d_hr.is_multiple_of(p.factor) {
                    return Err(key_err("problem.factor", format!("must divide d_hr = {}", p.d_hr)));
                }
                if self.objective.feature_spec.input_width() != p.d_hr {
                    return Err(key_err("objective.feature_spec", "input width must equal problem.d_hr"));
                }
            }
        }

        let m = &self.model;
        if !(m.slope > 0.0 && m.slope < 1.0) {
            return Err(key_err("model.slope", format!("{} outside (0, 1)", m.slope)));
        }
        if m.generator_hidden.iter().chain(&m.discriminator_hidden).any(|&w| w == 0) {
            return Err(key_err("model", "hidden widths must be positive"));
        }

        let f = &self.fusion;
        positive("fusion.validation_inputs", f.validation_inputs)?;
        positive("fusion.batch_size", f.batch_size)?;
        positive("fusion.steps_per_epoch", f.steps_per_epoch)?;
        if !(f.lr > 0.0) {
            return Err(key_err("fusion.lr", format!("{} must be positive", f.lr)));
        }
        nonneg("fusion.alpha1", f.alpha1)?;
        nonneg("fusion.alpha2", f.alpha2)?;
        nonneg("fusion.alpha3", f.alpha3)?;
        if f.feature_widths.len() != 3 || f.feature_widths.contains(&0) {
            return Err(key_err("fusion.feature_widths", "need three positive widths"));
        }
        if f.pooled_width == 0 || !f.feature_widths[2].is_multiple_of(f.pooled_width) {
            return Err(key_err("fusion.pooled_width", "must divide the last feature width"));
        }
        positive("fusion.mapping_hidden", f.mapping_hidden)?;
        Ok(())
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        self.adam.hyper(self.problem.kind)
    }
}
