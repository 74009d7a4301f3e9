//! Hybrid evolutionary/Adam multi-objective training for flat-parameter models.
//!
//! A population of models, one per trade-off weight λ, alternates Adam phases
//! on λ-weighted objectives with evolutionary phases (SBX crossover, Gaussian
//! mutation, Tchebycheff replacement). Trained experts can then be merged into
//! one model by per-layer convex fusion weights predicted by a small regressor.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adam;
pub mod config;
pub mod driver;
pub mod error;
pub mod evolution;
pub mod fusion;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
