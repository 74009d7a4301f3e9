//! Experiment subcommands. Each writes into a run directory:
//!
//! ```text
//! <run>/config.toml      fully defaulted config snapshot
//! <run>/checkpoints/     *.json checkpoints
//! <run>/log.csv          per-epoch log
//! <run>/front.csv        tag,f1,f2
//! <run>/report.txt       human-readable summary
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use evoadam_core::config::{ExperimentConfig, ProblemKind};
use evoadam_core::driver::{self, LogRow, Phase, RunLog, Task, ToySrTask};
use evoadam_core::evolution::{IdealPoint, WeightGrid};
use evoadam_core::fusion::{self, BaselineMode, FusionWeights};
use evoadam_core::metrics::{self, fmt_f64, FrontPoint};
use evoadam_core::model::FlatParams;
use evoadam_core::objectives::ObjectiveValues;
use evoadam_core::tensor::Tensor;

use crate::checkpoint::{config_hash, Checkpoint, ModelSpec, Provenance, Role};
use crate::config::{load_config, to_toml};

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const LOG_FILE: &str = "log.csv";
pub const FRONT_FILE: &str = "front.csv";
pub const REPORT_FILE: &str = "report.txt";

/// An output directory bound to one config snapshot.
pub struct RunDir {
    root: PathBuf,
    hash: String,
}

impl RunDir {
    pub fn create(root: &Path, config: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(root.join(CHECKPOINT_DIR)).with_context(|| format!("creating {}", root.display()))?;
        let snapshot = to_toml(config);
        write(&root.join(CONFIG_FILE), &snapshot)?;
        Ok(Self {
            root: root.to_path_buf(),
            hash: config_hash(&snapshot),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn checkpoint_path(&self, name: &str) -> PathBuf {
        self.root.join(CHECKPOINT_DIR).join(format!("{name}.json"))
    }

    pub fn provenance(&self, epoch: usize) -> Provenance {
        Provenance {
            config_hash: self.hash.clone(),
            epoch,
        }
    }

    fn save(&self, name: &str, role: Role, spec: ModelSpec, params: &FlatParams, lambda: Option<f64>, epoch: usize) -> Result<()> {
        Checkpoint::new(role, spec, params, lambda, self.provenance(epoch))
            .save(&self.checkpoint_path(name))
            .map_err(Into::into)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        write(&self.path(name), text)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn generator_spec(task: &Task) -> ModelSpec {
    task.generator_spec().cloned().map_or(ModelSpec::Vector, ModelSpec::Mlp)
}

/// Loads a checkpoint's parameters and checks they fit the task's generator.
pub fn load_generator(path: &Path, task: &Task) -> Result<FlatParams> {
    let ck = Checkpoint::load(path)?;
    let params = ck.params().with_context(|| format!("decoding {}", path.display()))?;
    let expected = task.init_generator(0)?;
    ensure!(
        params.same_layout(&expected),
        "{} does not hold a generator for this problem",
        path.display()
    );
    Ok(params)
}

fn pretrained(config: &ExperimentConfig, task: &Task, theta_g0: Option<&Path>) -> Result<FlatParams> {
    match theta_g0 {
        Some(p) => load_generator(p, task),
        None => Ok(driver::pretrain(config, task)?),
    }
}

fn report_front(out: &mut String, front: &[FrontPoint], task: &Task) -> Result<()> {
    if let Some(r) = metrics::default_reference(&[front]) {
        let _ = writeln!(
            out,
            "hypervolume {} (reference {}, {}: componentwise max x 1.1)",
            fmt_f64(metrics::hypervolume_2d(front, r)),
            fmt_f64(r.0),
            fmt_f64(r.1)
        );
    }
    if let Task::Analytic(p) = task {
        let reference = p.reference_front(101)?;
        let _ = writeln!(out, "igd {} (101 analytic front samples)", fmt_f64(metrics::igd(front, &reference)?));
    }
    let _ = writeln!(out, "mutually nondominated {}", metrics::mutually_nondominated(front));
    Ok(())
}

fn values_line(out: &mut String, tag: &str, lambda: Option<f64>, v: ObjectiveValues) {
    let lambda = lambda.map_or_else(|| "-".to_string(), fmt_f64);
    let _ = writeln!(out, "{tag} lambda {lambda} f1 {} f2 {}", fmt_f64(v.f1), fmt_f64(v.f2));
}

/// Trains θ_G0 and writes `checkpoints/theta_g0.json`. `log.csv` holds the
/// pretraining curve (`epoch,f1`).
pub fn pretrain(config: &ExperimentConfig, out: &Path) -> Result<FlatParams> {
    let task = Task::from_config(config)?;
    let dir = RunDir::create(out, config)?;
    let (theta, curve) = driver::pretrain_curve(config, &task)?;
    dir.save("theta_g0", Role::Generator, generator_spec(&task), &theta, Some(1.0), config.train.pretrain_epochs)?;
    let mut log = String::from("epoch,f1\n");
    for (e, v) in curve.iter().enumerate() {
        let _ = writeln!(log, "{},{}", e + 1, fmt_f64(*v));
    }
    dir.write(LOG_FILE, &log)?;
    let v = task.evaluate(&theta)?;
    let front = vec![FrontPoint::new("theta_g0", v.f1, v.f2)];
    dir.write(FRONT_FILE, &metrics::front_csv(&front))?;
    let mut report = String::from("pretrain\n");
    values_line(&mut report, "theta_g0", Some(1.0), v);
    dir.write(REPORT_FILE, &report)?;
    Ok(theta)
}

/// EA-Adam run. Writes θ_G0, one generator (and discriminator) checkpoint
/// per individual, the run log, the final front and a report.
pub fn train(config: &ExperimentConfig, out: &Path, theta_g0: Option<&Path>) -> Result<driver::RunOutput> {
    let task = Task::from_config(config)?;
    let dir = RunDir::create(out, config)?;
    let theta = pretrained(config, &task, theta_g0)?;
    let run = driver::run_from(config, &task, &theta, &mut |_| {})?;
    let epochs = config.train.epochs;
    let spec = generator_spec(&task);
    dir.save("theta_g0", Role::Generator, spec.clone(), &theta, Some(1.0), config.train.pretrain_epochs)?;
    for (k, ind) in run.population.individuals.iter().enumerate() {
        dir.save(&format!("gen_{k}"), Role::Generator, spec.clone(), &ind.gen, Some(ind.lambda), epochs)?;
        if let (Some(d), Some(ds)) = (&ind.disc, task.discriminator_spec()) {
            dir.save(&format!("disc_{k}"), Role::Discriminator, ModelSpec::Mlp(ds.clone()), d, Some(ind.lambda), epochs)?;
        }
    }
    dir.write(LOG_FILE, &run.log.to_csv())?;
    let front = front_of_rows(run.log.final_rows());
    dir.write(FRONT_FILE, &metrics::front_csv(&front))?;
    let mut report = format!("train: {} epochs, population {}\n", epochs, run.population.len());
    for r in run.log.final_rows() {
        values_line(&mut report, &format!("k={}", r.k), Some(r.lambda), r.values);
    }
    report_front(&mut report, &front, &task)?;
    dir.write(REPORT_FILE, &report)?;
    Ok(run)
}

/// Adam-only models over the same λ grid and step budget.
pub fn baseline(config: &ExperimentConfig, out: &Path, theta_g0: Option<&Path>) -> Result<driver::BaselineOutput> {
    let task = Task::from_config(config)?;
    let dir = RunDir::create(out, config)?;
    let theta = pretrained(config, &task, theta_g0)?;
    let grid = WeightGrid::uniform(config.train.population)?;
    let base = driver::run_adam_baseline(config, &task, &theta, grid.lambdas())?;
    let epochs = driver::adam_epoch_count(config);
    let spec = generator_spec(&task);
    dir.save("theta_g0", Role::Generator, spec.clone(), &theta, Some(1.0), config.train.pretrain_epochs)?;
    for (k, (m, &l)) in base.models.iter().zip(&base.lambdas).enumerate() {
        dir.save(&format!("gen_{k}"), Role::Generator, spec.clone(), m, Some(l), epochs)?;
    }
    dir.write(LOG_FILE, &base.log.to_csv())?;
    let front = base.front();
    dir.write(FRONT_FILE, &metrics::front_csv(&front))?;
    let mut report = format!("baseline: {epochs} Adam epochs per model\n");
    for (k, (v, &l)) in base.values.iter().zip(&base.lambdas).enumerate() {
        values_line(&mut report, &format!("k={k}"), Some(l), *v);
    }
    report_front(&mut report, &front, &task)?;
    dir.write(REPORT_FILE, &report)?;
    Ok(base)
}

/// Generator checkpoints `gen_0 … gen_{n-1}` of a train or baseline run.
pub fn expert_paths(run: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for k in 0.. {
        let p = run.join(CHECKPOINT_DIR).join(format!("gen_{k}.json"));
        if !p.exists() {
            break;
        }
        paths.push(p);
    }
    ensure!(paths.len() >= 2, "{} holds fewer than two generator checkpoints", run.display());
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct FuseOutput {
    pub weights: FusionWeights,
    pub fused: FlatParams,
    /// Weight matrices of the fusion baselines, by name.
    pub baselines: Vec<(String, FusionWeights)>,
    /// `(name, eval-split values)` of experts, fused model and baselines.
    pub values: Vec<(String, ObjectiveValues)>,
}

impl FuseOutput {
    pub fn value(&self, name: &str) -> Option<ObjectiveValues> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Trains the fusion regressor on the experts of a train run, fuses them and
/// builds the three baselines. Experts are copied byte for byte.
pub fn fuse(run: &Path, out: &Path) -> Result<FuseOutput> {
    let config = load_config(&run.join(CONFIG_FILE))?;
    ensure!(config.problem.kind == ProblemKind::ToySr, "fusion needs a toy-sr run");
    let task = ToySrTask::new(&config)?;
    let wrapped = Task::ToySr(Box::new(task.clone()));
    let dir = RunDir::create(out, &config)?;
    let mut experts = Vec::new();
    for (k, p) in expert_paths(run)?.iter().enumerate() {
        experts.push(load_generator(p, &wrapped)?);
        fs::copy(p, dir.checkpoint_path(&format!("expert_{k}")))
            .with_context(|| format!("copying {}", p.display()))?;
    }
    let f = &config.fusion;
    let reg = fusion::train_regressor(&task, &experts, f)?;
    let val = fusion::validation_inputs(&task, f.validation_inputs)?;
    let (w, fused) = fusion::universal_fuse(&reg.params, &reg.spec, &experts, &val)?;
    let spec = ModelSpec::Mlp(task.gen_spec.clone());
    dir.save("regressor", Role::Regressor, ModelSpec::Regressor(reg.spec.clone()), &reg.params, None, f.epochs)?;
    let wp = FlatParams::from_layers(&[(
        "universal".into(),
        Tensor::matrix(w.n_layers(), w.n_experts(), w.data().to_vec())?,
    )])?;
    dir.save("universal_weights", Role::FusionWeights, ModelSpec::Matrix, &wp, None, f.epochs)?;
    dir.save("fused", Role::Fused, spec.clone(), &fused, None, f.epochs)?;

    let mut values = Vec::new();
    for (k, e) in experts.iter().enumerate() {
        values.push((format!("expert_{k}"), task.evaluate_on(e, &task.data.eval)?));
    }
    values.push(("fused".into(), task.evaluate_on(&fused, &task.data.eval)?));
    let mut baselines = Vec::new();
    for (name, mode) in [
        ("uniform_average", BaselineMode::UniformAverage),
        ("single_layer_broadcast", BaselineMode::SingleLayerBroadcast),
        ("learnable_weight", BaselineMode::LearnableWeight),
    ] {
        let bw = fusion::baseline_weights(mode, &task, &experts, f, Some(&w))?;
        let g = fusion::assemble_fused(&experts, &bw)?;
        dir.save(&format!("fused_{name}"), Role::Fused, spec.clone(), &g, None, f.epochs)?;
        values.push((name.to_string(), task.evaluate_on(&g, &task.data.eval)?));
        baselines.push((name.to_string(), bw));
    }

    let mut log = String::from("epoch,loss\n");
    for (e, l) in reg.losses.iter().enumerate() {
        let _ = writeln!(log, "{},{}", e + 1, fmt_f64(*l));
    }
    dir.write(LOG_FILE, &log)?;
    let front: Vec<FrontPoint> = values.iter().map(|(n, v)| FrontPoint::new(n.clone(), v.f1, v.f2)).collect();
    dir.write(FRONT_FILE, &metrics::front_csv(&front))?;
    let mut report = format!("fuse: {} experts, {} layers, eval split of {}\n", experts.len(), w.n_layers(), task.data.eval.len());
    for (n, v) in &values {
        values_line(&mut report, n, None, *v);
    }
    report.push_str("universal weights (rows = layers):\n");
    for l in 0..w.n_layers() {
        let row: Vec<String> = w.row(l).iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(report, "  {}", row.join(" "));
    }
    dir.write(REPORT_FILE, &report)?;
    Ok(FuseOutput {
        weights: w,
        fused,
        baselines,
        values,
    })
}

/// Objective values of a generator checkpoint: the held-out eval split for
/// toy-sr, exact values for analytic problems. Without `config`, the
/// `config.toml` of the run directory holding the checkpoint is used.
pub fn eval(checkpoint: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<ObjectiveValues> {
    let config_path = match config {
        Some(p) => p.to_path_buf(),
        None => run_root(checkpoint)
            .map(|r| r.join(CONFIG_FILE))
            .filter(|p| p.exists())
            .context("no --config given and no config.toml next to the checkpoint's directory")?,
    };
    let config = load_config(&config_path)?;
    let task = Task::from_config(&config)?;
    let g = load_generator(checkpoint, &task)?;
    let v = match &task {
        Task::ToySr(s) => s.evaluate_on(&g, &s.data.eval)?,
        Task::Analytic(_) => task.evaluate(&g)?,
    };
    if let Some(out) = out {
        let dir = RunDir::create(out, &config)?;
        let tag = checkpoint.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
        fs::copy(checkpoint, dir.checkpoint_path(tag)).with_context(|| format!("copying {}", checkpoint.display()))?;
        dir.write(FRONT_FILE, &metrics::front_csv(&[FrontPoint::new(tag, v.f1, v.f2)]))?;
        let mut report = format!("eval of {}\n", checkpoint.display());
        values_line(&mut report, tag, Checkpoint::load(checkpoint)?.lambda, v);
        dir.write(REPORT_FILE, &report)?;
    }
    Ok(v)
}

fn run_root(checkpoint: &Path) -> Option<&Path> {
    let parent = checkpoint.parent()?;
    if parent.file_name().is_some_and(|n| n == CHECKPOINT_DIR) {
        parent.parent()
    } else {
        Some(parent)
    }
}

fn front_of_rows(rows: &[LogRow]) -> Vec<FrontPoint> {
    rows.iter()
        .map(|r| FrontPoint::new(r.k.to_string(), r.values.f1, r.values.f2))
        .collect()
}

/// Parses a `log.csv` written by [`RunLog::to_csv`].
pub fn parse_log_csv(text: &str) -> Result<RunLog> {
    let mut lines = text.lines();
    ensure!(lines.next() == Some(RunLog::HEADER), "log must start with `{}`", RunLog::HEADER);
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        ensure!(f.len() == 9, "log row {}: expected 9 fields", i + 1);
        let num = |j: usize| -> Result<f64> {
            f[j].parse().with_context(|| format!("log row {}: bad number `{}`", i + 1, f[j]))
        };
        let phase = match f[1] {
            "adam" => Phase::Adam,
            "ea" => Phase::Ea,
            other => bail!("log row {}: unknown phase `{other}`", i + 1),
        };
        rows.push(LogRow {
            epoch: f[0].parse().with_context(|| format!("log row {}: bad epoch", i + 1))?,
            phase,
            k: f[2].parse().with_context(|| format!("log row {}: bad index", i + 1))?,
            lambda: num(3)?,
            values: ObjectiveValues { f1: num(4)?, f2: num(5)? },
            tcheb: num(6)?,
            ideal: IdealPoint { z1: num(7)?, z2: num(8)? },
        });
    }
    Ok(RunLog { rows })
}

/// Front of one epoch of a run log (the last epoch by default).
pub fn front(log: &Path, out: &Path, epoch: Option<usize>) -> Result<Vec<FrontPoint>> {
    let text = fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let log = parse_log_csv(&text)?;
    let rows: Vec<LogRow> = match epoch {
        None => log.final_rows().to_vec(),
        Some(e) => log.rows.iter().filter(|r| r.epoch == e).cloned().collect(),
    };
    ensure!(!rows.is_empty(), "no log rows for the requested epoch");
    let front = front_of_rows(&rows);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join(FRONT_FILE), &metrics::front_csv(&front))?;
    Ok(front)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reference: (f64, f64),
    pub hypervolume: (f64, f64),
    /// IGD of each front against the nondominated points of both.
    pub igd: (f64, f64),
}

impl Comparison {
    pub fn hypervolume_ratio(&self) -> f64 {
        self.hypervolume.0 / self.hypervolume.1
    }

    pub fn igd_difference(&self) -> f64 {
        self.igd.0 - self.igd.1
    }

    pub fn report(&self, a: &str, b: &str) -> String {
        format!(
            "compare {a} vs {b}\n\
             reference {} {} (componentwise max of both fronts x 1.1)\n\
             hypervolume {} {}\n\
             hypervolume ratio {}\n\
             igd {} {} (against the nondominated union)\n\
             igd difference {}\n",
            fmt_f64(self.reference.0),
            fmt_f64(self.reference.1),
            fmt_f64(self.hypervolume.0),
            fmt_f64(self.hypervolume.1),
            fmt_f64(self.hypervolume_ratio()),
            fmt_f64(self.igd.0),
            fmt_f64(self.igd.1),
            fmt_f64(self.igd_difference()),
        )
    }
}

pub fn compare_fronts(a: &[FrontPoint], b: &[FrontPoint]) -> Result<Comparison> {
    ensure!(!a.is_empty() && !b.is_empty(), "cannot compare empty fronts");
    let reference = metrics::default_reference(&[a, b]).context("no reference point")?;
    let union: Vec<FrontPoint> = a.iter().chain(b).cloned().collect();
    let target: Vec<ObjectiveValues> = metrics::pareto_filter(&union).iter().map(FrontPoint::values).collect();
    Ok(Comparison {
        reference,
        hypervolume: (metrics::hypervolume_2d(a, reference), metrics::hypervolume_2d(b, reference)),
        igd: (metrics::igd(a, &target)?, metrics::igd(b, &target)?),
    })
}

/// Reads `front.csv` from a run directory, or the file itself.
pub fn read_front(path: &Path) -> Result<Vec<FrontPoint>> {
    let file = if path.is_dir() { path.join(FRONT_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    Ok(metrics::parse_front_csv(&text)?)
}

pub fn compare(a: &Path, b: &Path, out: Option<&Path>) -> Result<Comparison> {
    let c = compare_fronts(&read_front(a)?, &read_front(b)?)?;
    if let Some(out) = out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write(&out.join(REPORT_FILE), &c.report(&a.display().to_string(), &b.display().to_string()))?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_csv_roundtrip() {
        let rows = vec![
            LogRow {
                epoch: 1,
                phase: Phase::Adam,
                k: 0,
                lambda: 1.0,
                values: ObjectiveValues { f1: 0.1, f2: 0.2 },
                tcheb: 0.0,
                ideal: IdealPoint { z1: 0.1, z2: 0.2 },
            },
            LogRow {
                epoch: 2,
                phase: Phase::Ea,
                k: 1,
                lambda: 0.75,
                values: ObjectiveValues { f1: 1.0 / 3.0, f2: 2.5e-7 },
                tcheb: 1e-3,
                ideal: IdealPoint { z1: 0.1, z2: 2.5e-7 },
            },
        ];
        let log = RunLog { rows: rows.clone() };
        let back = parse_log_csv(&log.to_csv()).unwrap();
        assert_eq!(back.rows, rows);
        assert!(parse_log_csv("epoch,f1\n").is_err());
    }

    #[test]
    fn self_comparison_is_neutral() {
        let f = vec![FrontPoint::new("0", 0.0, 1.0), FrontPoint::new("1", 0.5, 0.4), FrontPoint::new("2", 1.0, 0.0)];
        let c = compare_fronts(&f, &f).unwrap();
        assert_eq!(c.hypervolume_ratio(), 1.0);
        assert_eq!(c.igd_difference(), 0.0);
        assert_eq!(c.igd, (0.0, 0.0));
    }

    #[test]
    fn dominated_front_compares_worse() {
        let a = vec![FrontPoint::new("a", 0.0, 0.5), FrontPoint::new("b", 0.5, 0.0)];
        let b = vec![FrontPoint::new("c", 0.5, 1.0), FrontPoint::new("d", 1.0, 0.5)];
        let c = compare_fronts(&a, &b).unwrap();
        assert!(c.hypervolume_ratio() > 1.0);
        assert!(c.igd_difference() < 0.0);
    }

    #[test]
    fn run_root_skips_checkpoint_dir() {
        assert_eq!(run_root(Path::new("/r/checkpoints/gen_0.json")), Some(Path::new("/r")));
        assert_eq!(run_root(Path::new("/r/x.json")), Some(Path::new("/r")));
    }
}
