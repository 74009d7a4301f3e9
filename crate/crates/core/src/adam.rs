//! Adam with explicit state, plus the two-gradient combiners used by the
//! λ-weighted Adam phases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(len: usize, hyper: AdamHyper) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            hyper,
        }
    }

    /// Zeroes both moments and the step counter, keeping hyperparameters.
    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }

    pub fn is_reset(&self) -> bool {
        self.t == 0 && self.m.iter().all(|&x| x == 0.0) && self.v.iter().all(|&x| x == 0.0)
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::invalid(format!(
            "adam_step: {} params, {} grads, state for {}",
            params.len(),
            grad.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient entry {i} is {}", grad[i])));
    }
    let AdamHyper { lr, beta1, beta2, eps } = state.hyper;
    state.t = state.t.saturating_add(1);
    let t = state.t.min(i32::MAX as u64) as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

fn check_pair(g1: &[f64], g2: &[f64], lambda: f64) -> Result<()> {
    if g1.len() != g2.len() {
        return Err(Error::invalid(format!(
            "gradient lengths differ: {} vs {}",
            g1.len(),
            g2.len()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda {lambda} outside [0,1]")));
    }
    if let Some(i) = g1.iter().chain(g2).position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient entry {i}")));
    }
    Ok(())
}

fn unit(g: &[f64]) -> Vec<f64> {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        g.iter().map(|x| x / norm).collect()
    } else {
        vec![0.0; g.len()]
    }
}

/// `λ·ĝ1 + (1−λ)·ĝ2` with each gradient scaled to unit L2 norm first.
pub fn gradnorm_combine(g1: &[f64], g2: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_pair(g1, g2, lambda)?;
    let (u1, u2) = (unit(g1), unit(g2));
    Ok(u1
        .iter()
        .zip(&u2)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect())
}

/// `λ·g1 + (1−λ)·g2`, the gradient of the λ-weighted sum of the objectives.
pub fn weighted_sum_combine(g1: &[f64], g2: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_pair(g1, g2, lambda)?;
    Ok(g1
        .iter()
        .zip(g2)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect())
}

/// How the Adam phase merges the two objective gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradCombine {
    #[default]
    WeightedSum,
    UnitNorm,
}

impl GradCombine {
    pub fn combine(self, g1: &[f64], g2: &[f64], lambda: f64) -> Result<Vec<f64>> {
        match self {
            GradCombine::WeightedSum => weighted_sum_combine(g1, g2, lambda),
            GradCombine::UnitNorm => gradnorm_combine(g1, g2, lambda),
        }
    }
}
