//! Evolutionary operators: SBX crossover with one spread factor per offspring,
//! Gaussian mutation, neighbourhood-biased parent selection, and Tchebycheff
//! replacement against a running ideal point.
//!
//! Individuals are indexed from 0. Index 0 carries λ = 1.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FlatParams;
use crate::objectives::ObjectiveValues;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvoConfig {
    /// SBX distribution index.
    pub eta: f64,
    /// Mutation variance.
    pub sigma2: f64,
    /// Probability of drawing parents from the neighbourhood.
    pub delta: f64,
    pub n_nbr: usize,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            eta: 20.0,
            sigma2: 0.01,
            delta: 0.7,
            n_nbr: 3,
        }
    }
}

impl EvoConfig {
    /// Checks ranges; `n` is the population size.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid(format!("eta {} must be positive", self.eta)));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::invalid(format!("sigma2 {} must be nonnegative", self.sigma2)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid(format!("delta {} outside [0,1]", self.delta)));
        }
        if self.n_nbr < 2 || self.n_nbr > n {
            return Err(Error::invalid(format!("n_nbr {} outside [2, {n}]", self.n_nbr)));
        }
        Ok(())
    }
}

/// Decomposition weights `λ_k = (N−1−k)/(N−1)` for `k = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    lambdas: Vec<f64>,
}

impl WeightGrid {
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("weight grid needs N >= 2, got {n}")));
        }
        let d = (n - 1) as f64;
        Ok(Self {
            lambdas: (0..n).map(|k| (n - 1 - k) as f64 / d).collect(),
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPoint {
    pub z1: f64,
    pub z2: f64,
}

impl Default for IdealPoint {
    fn default() -> Self {
        Self {
            z1: f64::INFINITY,
            z2: f64::INFINITY,
        }
    }
}

impl IdealPoint {
    pub fn update(&mut self, v: ObjectiveValues) {
        *self = update_ideal(*self, v);
    }

    pub fn is_finite(&self) -> bool {
        self.z1.is_finite() && self.z2.is_finite()
    }
}

pub fn update_ideal(z: IdealPoint, v: ObjectiveValues) -> IdealPoint {
    IdealPoint {
        z1: z.z1.min(v.f1),
        z2: z.z2.min(v.f2),
    }
}

/// `B(k)` for every `k`: the `n_nbr` indices with the closest λ, ties toward
/// the smaller index, stored in ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodMap {
    sets: Vec<Vec<usize>>,
}

impl NeighborhoodMap {
    pub fn get(&self, k: usize) -> &[usize] {
        &self.sets[k]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

pub fn build_neighborhood(grid: &WeightGrid, n_nbr: usize) -> Result<NeighborhoodMap> {
    let n = grid.len();
    if n_nbr == 0 || n_nbr > n {
        return Err(Error::invalid(format!("n_nbr {n_nbr} outside [1, {n}]")));
    }
    let l = grid.lambdas();
    let sets = (0..n)
        .map(|k| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&i, &j| {
                let (di, dj) = ((l[i] - l[k]).abs(), (l[j] - l[k]).abs());
                di.total_cmp(&dj).then(i.cmp(&j))
            });
            let mut b = idx[..n_nbr].to_vec();
            b.sort_unstable();
            b
        })
        .collect();
    Ok(NeighborhoodMap { sets })
}

/// SBX spread factor for a uniform draw `r ∈ [0,1)`.
pub fn sample_beta(r: f64, eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::invalid(format!("r {r} outside [0,1)")));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta {eta} must be positive")));
    }
    let e = 1.0 / (1.0 + eta);
    Ok(if r < 0.5 {
        (2.0 * r).powf(e)
    } else {
        (1.0 / (2.0 - 2.0 * r)).powf(e)
    })
}

/// `0.5·[(1+β)θ1 + (1−β)θ2]` with one β for the whole vector.
pub fn sbx_crossover(theta1: &FlatParams, theta2: &FlatParams, beta: f64) -> Result<FlatParams> {
    if !theta1.same_layout(theta2) {
        return Err(Error::Layout("crossover parents have different layouts".into()));
    }
    let (c1, c2) = (0.5 * (1.0 + beta), 0.5 * (1.0 - beta));
    let data = theta1
        .data()
        .iter()
        .zip(theta2.data())
        .map(|(a, b)| c1 * a + c2 * b)
        .collect();
    theta1.with_data(data)
}

/// Adds i.i.d. `N(0, sigma2)` noise to every value.
pub fn mutate<R: Rng + ?Sized>(theta: &FlatParams, sigma2: f64, rng: &mut R) -> Result<FlatParams> {
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid(format!("sigma2 {sigma2} must be nonnegative")));
    }
    if sigma2 == 0.0 {
        return Ok(theta.clone());
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let data = theta.data().iter().map(|&v| v + normal.sample(rng)).collect();
    theta.with_data(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parents {
    pub first: usize,
    pub second: usize,
    /// Whether the pool was the neighbourhood `B(k)` rather than everyone.
    pub from_neighbors: bool,
}

/// Draws `u`; the pool is `B(k)` when `u < delta`, else all `n` indices. Two
/// distinct indices are then drawn uniformly from the pool.
pub fn select_parents<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    nbh: &NeighborhoodMap,
    delta: f64,
    rng: &mut R,
) -> Result<Parents> {
    if k >= nbh.len() || n != nbh.len() {
        return Err(Error::invalid(format!("index {k} / population {n} vs neighbourhood of {}", nbh.len())));
    }
    let u: f64 = rng.random();
    let from_neighbors = u < delta;
    let all: Vec<usize>;
    let pool: &[usize] = if from_neighbors {
        nbh.get(k)
    } else {
        all = (0..n).collect();
        &all
    };
    if pool.len() < 2 {
        return Err(Error::invalid(format!("parent pool of size {}", pool.len())));
    }
    let i = rng.random_range(0..pool.len());
    let mut j = rng.random_range(0..pool.len() - 1);
    if j >= i {
        j += 1;
    }
    Ok(Parents {
        first: pool[i],
        second: pool[j],
        from_neighbors,
    })
}

/// `max{λ(f1−z1), (1−λ)(f2−z2)}`.
pub fn tchebycheff_value(v: ObjectiveValues, lambda: f64, z: IdealPoint) -> Result<f64> {
    if !(v.f1.is_finite() && v.f2.is_finite() && z.is_finite() && lambda.is_finite()) {
        return Err(Error::NonFinite(format!(
            "tchebycheff inputs f=({}, {}), z=({}, {}), lambda={lambda}",
            v.f1, v.f2, z.z1, z.z2
        )));
    }
    Ok((lambda * (v.f1 - z.z1)).max((1.0 - lambda) * (v.f2 - z.z2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    Keep,
    Replace,
}

/// Replaces only on a strict Tchebycheff improvement.
pub fn ea_replace(
    current: ObjectiveValues,
    offspring: ObjectiveValues,
    lambda: f64,
    z: IdealPoint,
) -> Result<Replacement> {
    let cur = tchebycheff_value(current, lambda, z)?;
    let off = tchebycheff_value(offspring, lambda, z)?;
    Ok(if off < cur {
        Replacement::Replace
    } else {
        Replacement::Keep
    })
}
