//! The EA-Adam training loop.
//!
//! After pretraining a generator on `f1` alone, N clones form the population,
//! individual `k` owning the weight `λ_k`. Epochs alternate between Adam
//! epochs (each non-frozen individual takes `inner_iterations` steps on the
//! λ-weighted objective, then its discriminator takes a step after every
//! generator step) and EA epochs (crossover, mutation and Tchebycheff
//! replacement, sequentially over `k`). Every Adam state is reset when an EA
//! phase ends. Individual 0 (λ = 1) is never modified.
//!
//! The schedule repeats `adam_epochs` Adam epochs followed by `ea_epochs` EA
//! epochs and is cut off after `epochs` epochs in total, so with T = 100,
//! T_adam = 10 and T_ea = 1 there are nine full cycles and a final run of one
//! Adam epoch: 91 Adam epochs and 9 EA epochs.
//!
//! All objective values that are logged or compared during EA use one fixed
//! evaluation batch. On the toy task its adversarial term is scored by a fixed
//! seeded "judge" discriminator, so values are comparable across individuals.

use std::fmt::Write as _;

use rand::Rng;

use crate::adam::{adam_step, AdamState};
use crate::config::{ExperimentConfig, ProblemKind};
use crate::error::{Error, Result};
use crate::evolution::{
    build_neighborhood, ea_replace, mutate, sample_beta, sbx_crossover, select_parents, tchebycheff_value,
    IdealPoint, NeighborhoodMap, Replacement, WeightGrid,
};
use crate::metrics::{fmt_f64, FrontPoint};
use crate::model::{init_mlp, mlp_apply, mlp_forward, Activation, FlatParams, LayerLayout, MlpNodes, MlpSpec};
use crate::objectives::{
    disc_loss_node, gen_adv_node, make_toy_sr_dataset, AnalyticProblem, EvalBatch, FeatureNet, ObjectiveValues,
    ToySrDataset,
};
use crate::rng::{self, tag, ChaCha8Rng};
use crate::tensor::{Graph, Tensor};

/// Losses and generator gradients on one minibatch.
#[derive(Debug, Clone)]
pub struct StepGrads {
    pub values: ObjectiveValues,
    pub grad_f1: Vec<f64>,
    pub grad_f2: Vec<f64>,
}

/// The toy super-resolution task: LR signals of width `d_hr / factor` are
/// mapped to HR signals of width `d_hr`.
#[derive(Debug, Clone)]
pub struct ToySrTask {
    pub data: ToySrDataset,
    pub gen_spec: MlpSpec,
    pub disc_spec: MlpSpec,
    pub features: FeatureNet,
    pub alpha: f64,
    pub judge: FlatParams,
    pub eval_batch: EvalBatch,
    pub batch_size: usize,
}

impl ToySrTask {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let p = &config.problem;
        let m = &config.model;
        let data = make_toy_sr_dataset(p.dataset_seed, p.samples, p.d_hr, p.factor)?;
        let hidden = Activation::LeakyRelu { slope: m.slope };
        let widths = |input: usize, mid: &[usize], output: usize| {
            std::iter::once(input).chain(mid.iter().copied()).chain(std::iter::once(output)).collect()
        };
        let gen_spec = MlpSpec::new(widths(p.d_hr / p.factor, &m.generator_hidden, p.d_hr), hidden, Activation::Identity)?;
        let disc_spec = MlpSpec::new(widths(p.d_hr, &m.discriminator_hidden, 1), hidden, Activation::Identity)?;
        let judge = init_mlp(&disc_spec, m.judge_seed)?;
        let mut r = rng::stream(config.train.eval_batch_seed, &[tag::EVAL_BATCH]);
        let eval_batch = data.validation.sample(config.train.eval_batch_size, &mut r)?;
        Ok(Self {
            data,
            gen_spec,
            disc_spec,
            features: FeatureNet::new(&config.objective)?,
            alpha: config.objective.alpha,
            judge,
            eval_batch,
            batch_size: config.train.batch_size,
        })
    }

    pub fn predict(&self, gen: &FlatParams, inputs: &Tensor) -> Result<Tensor> {
        mlp_forward(gen, &self.gen_spec, inputs)
    }

    /// `(f1, f2)` on `batch`, with the judge scoring the adversarial term.
    pub fn evaluate_on(&self, gen: &FlatParams, batch: &EvalBatch) -> Result<ObjectiveValues> {
        let mut g = Graph::new();
        let x = g.input(batch.inputs.clone());
        let y = g.input(batch.targets.clone());
        let pred = mlp_apply(gen, &self.gen_spec, x, &mut g)?.output;
        let f1 = g.mean_abs_error(pred, y)?;
        let percep = self.features.distance(&mut g, pred, y)?;
        let adv = gen_adv_node(&mut g, &self.judge, &self.disc_spec, pred)?;
        Ok(ObjectiveValues {
            f1: g.scalar(f1)?,
            f2: g.scalar(percep)? + self.alpha * g.scalar(adv)?,
        })
    }

    /// Gradients of `f1` and of `f2` (with `disc` supplying the adversarial
    /// term) with respect to the generator parameters.
    pub fn objective_grads(&self, gen: &FlatParams, disc: &FlatParams, batch: &EvalBatch) -> Result<StepGrads> {
        let mut g = Graph::new();
        let x = g.input(batch.inputs.clone());
        let y = g.input(batch.targets.clone());
        let nodes = mlp_apply(gen, &self.gen_spec, x, &mut g)?;
        let f1 = g.mean_abs_error(nodes.output, y)?;
        let percep = self.features.distance(&mut g, nodes.output, y)?;
        let adv = gen_adv_node(&mut g, disc, &self.disc_spec, nodes.output)?;
        let adv = g.scale(adv, self.alpha)?;
        let f2 = g.add(percep, adv)?;
        let lens = MlpNodes::lens(gen);
        let grad_f1 = g.backward(f1)?.concat(&nodes.params, &lens);
        let grad_f2 = g.backward(f2)?.concat(&nodes.params, &lens);
        Ok(StepGrads {
            values: ObjectiveValues {
                f1: g.scalar(f1)?,
                f2: g.scalar(f2)?,
            },
            grad_f1,
            grad_f2,
        })
    }

    pub fn f1_grad(&self, gen: &FlatParams, batch: &EvalBatch) -> Result<(f64, Vec<f64>)> {
        let mut g = Graph::new();
        let x = g.input(batch.inputs.clone());
        let y = g.input(batch.targets.clone());
        let nodes = mlp_apply(gen, &self.gen_spec, x, &mut g)?;
        let f1 = g.mean_abs_error(nodes.output, y)?;
        let grad = g.backward(f1)?.concat(&nodes.params, &MlpNodes::lens(gen));
        Ok((g.scalar(f1)?, grad))
    }

    /// Discriminator loss and gradient, with the generator output held fixed.
    pub fn disc_grad(&self, gen: &FlatParams, disc: &FlatParams, batch: &EvalBatch) -> Result<(f64, Vec<f64>)> {
        let fake = self.predict(gen, &batch.inputs)?;
        let mut g = Graph::new();
        let p = g.input(fake);
        let r = g.input(batch.targets.clone());
        let (loss, leaves) = disc_loss_node(&mut g, disc, &self.disc_spec, p, r)?;
        let grad = g.backward(loss)?.concat(&leaves, &MlpNodes::lens(disc));
        Ok((g.scalar(loss)?, grad))
    }

    pub fn minibatch(&self, rng: &mut ChaCha8Rng) -> Result<EvalBatch> {
        self.data.train.sample(self.batch_size, rng)
    }
}

/// What the driver trains on.
#[derive(Debug, Clone)]
pub enum Task {
    ToySr(Box<ToySrTask>),
    /// Exact gradients of a bi-objective problem over a decision vector `x`.
    Analytic(AnalyticProblem),
}

impl Task {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let p = &config.problem;
        Ok(match p.kind {
            ProblemKind::ToySr => Task::ToySr(Box::new(ToySrTask::new(config)?)),
            ProblemKind::QuadraticPair => {
                Task::Analytic(AnalyticProblem::seeded_quadratic_pair(p.dimension, p.seed, p.separation)?)
            }
            ProblemKind::ConcaveFront => Task::Analytic(AnalyticProblem::concave_front(p.dimension)?),
        })
    }

    pub fn has_discriminator(&self) -> bool {
        matches!(self, Task::ToySr(_))
    }

    /// Network spec of the generator; analytic problems have none.
    pub fn generator_spec(&self) -> Option<&MlpSpec> {
        match self {
            Task::ToySr(t) => Some(&t.gen_spec),
            Task::Analytic(_) => None,
        }
    }

    pub fn discriminator_spec(&self) -> Option<&MlpSpec> {
        match self {
            Task::ToySr(t) => Some(&t.disc_spec),
            Task::Analytic(_) => None,
        }
    }

    pub fn init_generator(&self, seed: u64) -> Result<FlatParams> {
        match self {
            Task::ToySr(t) => init_mlp(&t.gen_spec, seed),
            Task::Analytic(p) => {
                let mut r = rng::stream(seed, &[tag::INIT]);
                let x = (0..p.dim()).map(|_| r.sample(rand_distr::StandardNormal)).collect();
                analytic_params(x)
            }
        }
    }

    pub fn init_discriminator(&self, seed: u64) -> Result<Option<FlatParams>> {
        match self {
            Task::ToySr(t) => Ok(Some(init_mlp(&t.disc_spec, seed)?)),
            Task::Analytic(_) => Ok(None),
        }
    }

    /// Objective values on the fixed evaluation batch.
    pub fn evaluate(&self, gen: &FlatParams) -> Result<ObjectiveValues> {
        match self {
            Task::ToySr(t) => t.evaluate_on(gen, &t.eval_batch),
            Task::Analytic(p) => Ok(p.eval(gen.data())?.values),
        }
    }
}

/// Wraps a decision vector as a single-layer parameter vector.
pub fn analytic_params(x: Vec<f64>) -> Result<FlatParams> {
    let n = x.len();
    FlatParams::new(
        x,
        vec![LayerLayout {
            name: "x".into(),
            offset: 0,
            len: n,
            shape: vec![n],
        }],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Adam,
    Ea,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Adam => "adam",
            Phase::Ea => "ea",
        }
    }
}

/// Phase of each epoch `1..=epochs`.
pub fn schedule(epochs: usize, adam_epochs: usize, ea_epochs: usize) -> Vec<Phase> {
    let cycle = adam_epochs + ea_epochs;
    (0..epochs)
        .map(|e| if e % cycle < adam_epochs { Phase::Adam } else { Phase::Ea })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub gen: FlatParams,
    pub disc: Option<FlatParams>,
    pub gen_adam: AdamState,
    pub disc_adam: Option<AdamState>,
    pub lambda: f64,
    pub last_values: Option<ObjectiveValues>,
    pub frozen: bool,
}

#[derive(Debug, Clone)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub grid: WeightGrid,
    pub neighborhood: NeighborhoodMap,
    pub ideal: IdealPoint,
}

impl Population {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn adam_states_reset(&self) -> bool {
        self.individuals
            .iter()
            .all(|i| i.gen_adam.is_reset() && i.disc_adam.as_ref().is_none_or(AdamState::is_reset))
    }

    pub fn front(&self) -> Vec<FrontPoint> {
        self.individuals
            .iter()
            .enumerate()
            .filter_map(|(k, i)| i.last_values.map(|v| FrontPoint::new(k.to_string(), v.f1, v.f2)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub epoch: usize,
    pub phase: Phase,
    pub k: usize,
    pub lambda: f64,
    pub values: ObjectiveValues,
    pub tcheb: f64,
    pub ideal: IdealPoint,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub const HEADER: &'static str = "epoch,phase,k,lambda,f1,f2,tcheb,z1,z2";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::HEADER);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.epoch,
                r.phase.as_str(),
                r.k,
                fmt_f64(r.lambda),
                fmt_f64(r.values.f1),
                fmt_f64(r.values.f2),
                fmt_f64(r.tcheb),
                fmt_f64(r.ideal.z1),
                fmt_f64(r.ideal.z2)
            );
        }
        s
    }

    /// Rows of the last logged epoch.
    pub fn final_rows(&self) -> &[LogRow] {
        let Some(last) = self.rows.last() else { return &[] };
        let start = self.rows.iter().position(|r| r.epoch == last.epoch).unwrap_or(0);
        &self.rows[start..]
    }
}

/// Hook called while a run progresses.
#[derive(Debug)]
pub enum Event<'a> {
    EpochEnd {
        epoch: usize,
        phase: Phase,
        population: &'a Population,
    },
    /// An EA phase finished and Adam states were reset.
    EaPhaseEnd {
        epoch: usize,
        population: &'a Population,
    },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub theta_g0: FlatParams,
    pub population: Population,
    pub log: RunLog,
}

fn diverged(what: &str, v: ObjectiveValues) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged(format!("{what}: f1 = {}, f2 = {}", v.f1, v.f2)))
    }
}

/// Trains a fresh generator on `f1` for `pretrain_epochs` epochs.
pub fn pretrain(config: &ExperimentConfig, task: &Task) -> Result<FlatParams> {
    pretrain_impl(config, task, false).map(|(g, _)| g)
}

/// [`pretrain`] plus `f1` on the fixed evaluation batch after each epoch.
pub fn pretrain_curve(config: &ExperimentConfig, task: &Task) -> Result<(FlatParams, Vec<f64>)> {
    pretrain_impl(config, task, true)
}

fn pretrain_impl(config: &ExperimentConfig, task: &Task, trace: bool) -> Result<(FlatParams, Vec<f64>)> {
    let t = &config.train;
    let mut gen = task.init_generator(rng::derive_seed(t.master_seed, &[tag::INIT]))?;
    let mut state = AdamState::new(gen.len(), config.adam_hyper());
    let mut curve = Vec::new();
    for epoch in 1..=t.pretrain_epochs {
        let mut r = rng::stream(t.master_seed, &[tag::MINIBATCH, u64::MAX, epoch as u64]);
        for _ in 0..t.inner_iterations {
            let (loss, grad) = match task {
                Task::ToySr(s) => s.f1_grad(&gen, &s.minibatch(&mut r)?)?,
                Task::Analytic(p) => {
                    let e = p.eval(gen.data())?;
                    (e.values.f1, e.grad_f1)
                }
            };
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("pretraining epoch {epoch}: loss {loss}")));
            }
            adam_step(gen.data_mut(), &grad, &mut state)
                .map_err(|e| Error::Diverged(format!("pretraining epoch {epoch}: {e}")))?;
        }
        if trace {
            curve.push(task.evaluate(&gen)?.f1);
        }
    }
    Ok((gen, curve))
}

/// N clones of `theta_g0`, fresh discriminators for every non-frozen
/// individual, fresh Adam states, and an ideal point at +∞.
pub fn init_population(theta_g0: &FlatParams, config: &ExperimentConfig, task: &Task) -> Result<Population> {
    let n = config.train.population;
    let grid = WeightGrid::uniform(n)?;
    let neighborhood = build_neighborhood(&grid, config.evo.n_nbr)?;
    let hyper = config.adam_hyper();
    let mut individuals = Vec::with_capacity(n);
    for (k, &lambda) in grid.lambdas().iter().enumerate() {
        let frozen = k == 0;
        let disc = if frozen {
            None
        } else {
            task.init_discriminator(rng::derive_seed(config.train.master_seed, &[tag::DISC_INIT, k as u64]))?
        };
        individuals.push(Individual {
            gen: theta_g0.clone(),
            gen_adam: AdamState::new(theta_g0.len(), hyper),
            disc_adam: disc.as_ref().map(|d| AdamState::new(d.len(), hyper)),
            disc,
            lambda,
            last_values: None,
            frozen,
        });
    }
    Ok(Population {
        individuals,
        grid,
        neighborhood,
        ideal: IdealPoint::default(),
    })
}

/// `inner_iterations` λ-weighted generator steps, each followed by a
/// discriminator step, for one individual.
fn train_individual(
    ind: &mut Individual,
    task: &Task,
    config: &ExperimentConfig,
    stream: &mut ChaCha8Rng,
    label: &str,
) -> Result<()> {
    let combine = config.train.grad_combine;
    for it in 0..config.train.inner_iterations {
        let where_ = || format!("{label}, iteration {it}");
        match task {
            Task::ToySr(s) => {
                let batch = s.minibatch(stream)?;
                let disc = ind.disc.as_ref().ok_or_else(|| Error::invalid("trainable individual without discriminator"))?;
                let g = s.objective_grads(&ind.gen, disc, &batch)?;
                diverged(&where_(), g.values)?;
                let step = combine.combine(&g.grad_f1, &g.grad_f2, ind.lambda)?;
                adam_step(ind.gen.data_mut(), &step, &mut ind.gen_adam)
                    .map_err(|e| Error::Diverged(format!("{}: {e}", where_())))?;
                let (dl, dgrad) = s.disc_grad(&ind.gen, disc, &batch)?;
                if !dl.is_finite() {
                    return Err(Error::Diverged(format!("{}: discriminator loss {dl}", where_())));
                }
                let (disc, state) = (ind.disc.as_mut().expect("checked"), ind.disc_adam.as_mut().expect("paired"));
                adam_step(disc.data_mut(), &dgrad, state)
                    .map_err(|e| Error::Diverged(format!("{}: {e}", where_())))?;
            }
            Task::Analytic(p) => {
                let e = p.eval(ind.gen.data())?;
                diverged(&where_(), e.values)?;
                let step = combine.combine(&e.grad_f1, &e.grad_f2, ind.lambda)?;
                adam_step(ind.gen.data_mut(), &step, &mut ind.gen_adam)
                    .map_err(|e| Error::Diverged(format!("{}: {e}", where_())))?;
            }
        }
    }
    Ok(())
}

/// One Adam epoch over every non-frozen individual.
pub fn adam_phase(pop: &mut Population, task: &Task, config: &ExperimentConfig, epoch: usize) -> Result<()> {
    for (k, ind) in pop.individuals.iter_mut().enumerate() {
        if ind.frozen {
            continue;
        }
        let mut r = rng::stream(config.train.master_seed, &[tag::MINIBATCH, k as u64, epoch as u64]);
        train_individual(ind, task, config, &mut r, &format!("individual {k}, epoch {epoch}"))?;
    }
    Ok(())
}

/// One EA epoch: for each non-frozen `k` in order, breed one offspring and
/// keep it if it improves the Tchebycheff value of `k`. Returns the number of
/// offspring evaluated.
pub fn ea_epoch(pop: &mut Population, task: &Task, config: &ExperimentConfig, epoch: usize) -> Result<usize> {
    let evo = &config.evo;
    let n = pop.len();
    let mut offspring = 0;
    for k in 0..n {
        if pop.individuals[k].frozen {
            continue;
        }
        let mut r = rng::stream(config.train.master_seed, &[tag::EA, k as u64, epoch as u64]);
        let parents = select_parents(k, n, &pop.neighborhood, evo.delta, &mut r)?;
        let beta = sample_beta(r.random(), evo.eta)?;
        let child = sbx_crossover(&pop.individuals[parents.first].gen, &pop.individuals[parents.second].gen, beta)?;
        let child = mutate(&child, evo.sigma2, &mut r)?;
        let child_values = task.evaluate(&child)?;
        let current_values = task.evaluate(&pop.individuals[k].gen)?;
        offspring += 1;
        diverged(&format!("offspring of {k}, epoch {epoch}"), child_values)?;
        pop.ideal.update(child_values);
        pop.ideal.update(current_values);
        let ind = &mut pop.individuals[k];
        ind.last_values = Some(current_values);
        if ea_replace(current_values, child_values, ind.lambda, pop.ideal)? == Replacement::Replace {
            ind.gen = child;
            ind.last_values = Some(child_values);
        }
    }
    Ok(offspring)
}

/// Zeroes every Adam state in the population.
pub fn reset_adam_states(pop: &mut Population) {
    for ind in &mut pop.individuals {
        ind.gen_adam.reset();
        if let Some(s) = ind.disc_adam.as_mut() {
            s.reset();
        }
    }
}

/// Runs `ea_epochs` EA epochs starting at `first_epoch`, then resets every
/// Adam state.
pub fn ea_phase(
    pop: &mut Population,
    task: &Task,
    config: &ExperimentConfig,
    first_epoch: usize,
    ea_epochs: usize,
) -> Result<usize> {
    let mut n = 0;
    for e in first_epoch..first_epoch + ea_epochs {
        n += ea_epoch(pop, task, config, e)?;
    }
    reset_adam_states(pop);
    Ok(n)
}

/// Evaluates every individual, folds the values into the ideal point and
/// appends one row per individual.
fn log_epoch(pop: &mut Population, task: &Task, log: &mut RunLog, epoch: usize, phase: Phase) -> Result<()> {
    let mut values = Vec::with_capacity(pop.len());
    for ind in &pop.individuals {
        let v = task.evaluate(&ind.gen)?;
        diverged(&format!("evaluation at epoch {epoch}"), v)?;
        values.push(v);
    }
    for &v in &values {
        pop.ideal.update(v);
    }
    for (k, (ind, v)) in pop.individuals.iter_mut().zip(values).enumerate() {
        ind.last_values = Some(v);
        log.rows.push(LogRow {
            epoch,
            phase,
            k,
            lambda: ind.lambda,
            values: v,
            tcheb: tchebycheff_value(v, ind.lambda, pop.ideal)?,
            ideal: pop.ideal,
        });
    }
    Ok(())
}

/// Pretrains, then runs the alternating schedule.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let task = Task::from_config(config)?;
    let theta_g0 = pretrain(config, &task)?;
    run_from(config, &task, &theta_g0, &mut |_| {})
}

/// Runs the alternating schedule from a given pretrained generator.
pub fn run_from(
    config: &ExperimentConfig,
    task: &Task,
    theta_g0: &FlatParams,
    observer: &mut dyn FnMut(Event<'_>),
) -> Result<RunOutput> {
    let t = &config.train;
    let mut pop = init_population(theta_g0, config, task)?;
    let mut log = RunLog::default();
    let phases = schedule(t.epochs, t.adam_epochs, t.ea_epochs);
    for (i, &phase) in phases.iter().enumerate() {
        let epoch = i + 1;
        match phase {
            Phase::Adam => adam_phase(&mut pop, task, config, epoch)?,
            Phase::Ea => {
                ea_epoch(&mut pop, task, config, epoch)?;
            }
        }
        log_epoch(&mut pop, task, &mut log, epoch, phase)?;
        observer(Event::EpochEnd {
            epoch,
            phase,
            population: &pop,
        });
        let phase_ends = phases.get(i + 1) != Some(&Phase::Ea);
        if phase == Phase::Ea && phase_ends {
            reset_adam_states(&mut pop);
            observer(Event::EaPhaseEnd {
                epoch,
                population: &pop,
            });
        }
    }
    Ok(RunOutput {
        theta_g0: theta_g0.clone(),
        population: pop,
        log,
    })
}

#[derive(Debug, Clone)]
pub struct BaselineOutput {
    pub models: Vec<FlatParams>,
    pub lambdas: Vec<f64>,
    pub values: Vec<ObjectiveValues>,
    pub log: RunLog,
}

impl BaselineOutput {
    pub fn front(&self) -> Vec<FrontPoint> {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| FrontPoint::new(k.to_string(), v.f1, v.f2))
            .collect()
    }
}

/// Number of Adam epochs in the schedule of `config`.
pub fn adam_epoch_count(config: &ExperimentConfig) -> usize {
    let t = &config.train;
    schedule(t.epochs, t.adam_epochs, t.ea_epochs)
        .iter()
        .filter(|&&p| p == Phase::Adam)
        .count()
}

/// Adam-only training of one model per weight in `weights`, each starting
/// from `theta_g0` and taking as many generator steps as a non-frozen
/// individual of [`run_from`].
pub fn run_adam_baseline(
    config: &ExperimentConfig,
    task: &Task,
    theta_g0: &FlatParams,
    weights: &[f64],
) -> Result<BaselineOutput> {
    if weights.is_empty() || weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::invalid(format!("baseline weights {weights:?}")));
    }
    let hyper = config.adam_hyper();
    let seed = config.train.master_seed;
    let mut models = Vec::with_capacity(weights.len());
    for (k, &lambda) in weights.iter().enumerate() {
        let disc = task.init_discriminator(rng::derive_seed(seed, &[tag::DISC_INIT, k as u64]))?;
        models.push(Individual {
            gen: theta_g0.clone(),
            gen_adam: AdamState::new(theta_g0.len(), hyper),
            disc_adam: disc.as_ref().map(|d| AdamState::new(d.len(), hyper)),
            disc,
            lambda,
            last_values: None,
            frozen: false,
        });
    }
    let mut log = RunLog::default();
    let mut ideal = IdealPoint::default();
    for epoch in 1..=adam_epoch_count(config) {
        let mut values = Vec::with_capacity(models.len());
        for (k, ind) in models.iter_mut().enumerate() {
            let mut r = rng::stream(seed, &[tag::MINIBATCH, k as u64, epoch as u64]);
            train_individual(ind, task, config, &mut r, &format!("baseline {k}, epoch {epoch}"))?;
            let v = task.evaluate(&ind.gen)?;
            diverged(&format!("baseline {k}, epoch {epoch}"), v)?;
            ind.last_values = Some(v);
            values.push(v);
        }
        for &v in &values {
            ideal.update(v);
        }
        for (k, (ind, v)) in models.iter().zip(values).enumerate() {
            log.rows.push(LogRow {
                epoch,
                phase: Phase::Adam,
                k,
                lambda: ind.lambda,
                values: v,
                tcheb: tchebycheff_value(v, ind.lambda, ideal)?,
                ideal,
            });
        }
    }
    let values = models
        .iter()
        .map(|m| match m.last_values {
            Some(v) => Ok(v),
            None => task.evaluate(&m.gen),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaselineOutput {
        lambdas: weights.to_vec(),
        models: models.into_iter().map(|m| m.gen).collect(),
        values,
        log,
    })
}
