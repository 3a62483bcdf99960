//! Hyperparameter search over reservoir settings and the ridge strength.
//!
//! Two strategies are provided: [`random_search`] draws configurations
//! uniformly (log-uniformly for the scale-free knobs) from a [`SearchSpace`],
//! and [`grid_search`] sweeps an explicit [`GridSpec`] exhaustively. Random
//! search at modest budgets is competitive for a six-dimensional space like
//! this one and keeps the crate free of surrogate-model machinery; anything
//! smarter (Gaussian processes, acquisition functions, early stopping) is
//! deliberately out of scope.
//!
//! The objective is leakage-free by construction: the tuning pool is the
//! *training* side of the configured protocol's first fold, and each trial is
//! scored by stratified 3-fold cross-validation inside that pool. The held-out
//! side of the outer split never influences a trial.
//!
//! Trials are independent and run in parallel; the trial log is always
//! ordered by trial index and always has exactly `budget` (or grid-size)
//! entries — failed trials stay in the log with objective 0 and the error
//! text. Wall-clock per-trial times live outside the stable log (see
//! [`TuneOutcome::timing_json`]) so repeated runs of the same search produce
//! byte-identical logs.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PayloadDims, PayloadKind, SampleRecord};
use crate::error::{Error, Result};
use crate::eval::{plan_split, run_eval, Fold, SplitPlan};
use crate::pipeline::{PipelineConfig, PipelineEmbedder, PipelineTrainer, ReservoirSettings};
use crate::rng::{derive_seed, RngStream};

/// Folds used for the in-pool validation objective.
const VALIDATION_FOLDS: usize = 3;

// ---------------------------------------------------------------------------
// Search spaces
// ---------------------------------------------------------------------------

fn check_interval(name: &'static str, [lo, hi]: [f64; 2], max: f64) -> Result<()> {
    let bad = |detail: String| Error::Parameter { name, detail };
    if !lo.is_finite() || !hi.is_finite() {
        return Err(bad(format!("interval [{lo}, {hi}] must be finite")));
    }
    if !(lo > 0.0) {
        return Err(bad(format!("interval [{lo}, {hi}] must start above 0")));
    }
    if lo > hi {
        return Err(bad(format!("interval [{lo}, {hi}] is empty")));
    }
    if hi > max {
        return Err(bad(format!("interval [{lo}, {hi}] exceeds the limit {max}")));
    }
    Ok(())
}

/// Ranges for [`random_search`] to draw from.
///
/// `leaking_rate` and `lambda` are drawn log-uniformly — both act
/// multiplicatively, so a uniform draw would oversample their upper decades.
/// The remaining real intervals are uniform and `nodes` is a finite set.
/// Defaults bracket commonly used values by a factor of four in each
/// direction, clamped to each parameter's validity range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub nodes: Vec<usize>,
    pub spectral_radius: [f64; 2],
    pub input_scaling: [f64; 2],
    pub density: [f64; 2],
    /// Drawn log-uniformly.
    pub leaking_rate: [f64; 2],
    /// Drawn log-uniformly.
    pub lambda: [f64; 2],
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            nodes: vec![12, 25, 50, 100, 250, 500, 1000, 2000, 4000],
            spectral_radius: [0.2375, 4.4],
            input_scaling: [0.025, 4.0],
            density: [0.0125, 1.0],
            leaking_rate: [0.0025, 0.2],
            lambda: [0.025, 0.4],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Parameter {
                name: "nodes",
                detail: "the node set must not be empty".into(),
            });
        }
        if self.nodes.contains(&0) {
            return Err(Error::Parameter {
                name: "nodes",
                detail: "node counts must be ≥ 1".into(),
            });
        }
        check_interval("spectral_radius", self.spectral_radius, f64::INFINITY)?;
        check_interval("input_scaling", self.input_scaling, f64::INFINITY)?;
        check_interval("density", self.density, 1.0)?;
        check_interval("leaking_rate", self.leaking_rate, 1.0)?;
        check_interval("lambda", self.lambda, f64::INFINITY)?;
        Ok(())
    }

    /// Draw one configuration. Knobs are drawn in field order so a seeded
    /// stream reproduces the same sequence of configurations.
    fn sample(&self, rng: &mut RngStream) -> (ReservoirSettings, f64) {
        let nodes = self.nodes[rng.index(self.nodes.len())];
        let spectral_radius_target = rng.uniform(self.spectral_radius[0], self.spectral_radius[1]);
        let input_scaling = rng.uniform(self.input_scaling[0], self.input_scaling[1]);
        let density = rng.uniform(self.density[0], self.density[1]);
        let leaking_rate = log_uniform(rng, self.leaking_rate);
        let lambda = log_uniform(rng, self.lambda);
        (
            ReservoirSettings {
                nodes,
                spectral_radius_target,
                input_scaling,
                density,
                leaking_rate,
            },
            lambda,
        )
    }
}

fn log_uniform(rng: &mut RngStream, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        // Keep point intervals exact instead of round-tripping through ln/exp.
        return lo;
    }
    rng.uniform(lo.ln(), hi.ln()).exp()
}

/// Explicit value lists for [`grid_search`]; the grid is their cross product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nodes: Vec<usize>,
    pub spectral_radius: Vec<f64>,
    pub input_scaling: Vec<f64>,
    pub density: Vec<f64>,
    pub leaking_rate: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let defaults = ReservoirSettings::default();
        GridSpec {
            nodes: vec![defaults.nodes],
            spectral_radius: vec![defaults.spectral_radius_target],
            input_scaling: vec![defaults.input_scaling],
            density: vec![defaults.density],
            leaking_rate: vec![defaults.leaking_rate],
            lambda: vec![0.1],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        fn check_axis(name: &'static str, values: &[f64], max: f64) -> Result<()> {
            if values.is_empty() {
                return Err(Error::Parameter { name, detail: "axis must not be empty".into() });
            }
            for &v in values {
                if !v.is_finite() || !(v > 0.0) || v > max {
                    return Err(Error::Parameter {
                        name,
                        detail: format!("value {v} is outside the valid range"),
                    });
                }
            }
            Ok(())
        }
        if self.nodes.is_empty() || self.nodes.contains(&0) {
            return Err(Error::Parameter {
                name: "nodes",
                detail: "axis must not be empty and node counts must be ≥ 1".into(),
            });
        }
        check_axis("spectral_radius", &self.spectral_radius, f64::INFINITY)?;
        check_axis("input_scaling", &self.input_scaling, f64::INFINITY)?;
        check_axis("density", &self.density, 1.0)?;
        check_axis("leaking_rate", &self.leaking_rate, 1.0)?;
        check_axis("lambda", &self.lambda, f64::INFINITY)?;
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
            * self.spectral_radius.len()
            * self.input_scaling.len()
            * self.density.len()
            * self.leaking_rate.len()
            * self.lambda.len()
    }

    /// All grid points in lexicographic field order (lambda varies fastest).
    fn points(&self) -> Vec<(ReservoirSettings, f64)> {
        let mut out = Vec::with_capacity(self.size());
        for &nodes in &self.nodes {
            for &spectral_radius_target in &self.spectral_radius {
                for &input_scaling in &self.input_scaling {
                    for &density in &self.density {
                        for &leaking_rate in &self.leaking_rate {
                            for &lambda in &self.lambda {
                                out.push((
                                    ReservoirSettings {
                                        nodes,
                                        spectral_radius_target,
                                        input_scaling,
                                        density,
                                        leaking_rate,
                                    },
                                    lambda,
                                ));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

/// One evaluated configuration.
///
/// `elapsed_seconds` is excluded from serialization so trial logs stay
/// byte-identical across runs; [`TuneOutcome::timing_json`] carries it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    /// The full configuration the trial evaluated.
    pub config: PipelineConfig,
    /// Mean validation accuracy over the in-pool folds; 0 for failed trials.
    pub objective: f64,
    #[serde(skip)]
    pub elapsed_seconds: f64,
    /// Why the trial failed, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A finished search: every trial, plus which one won.
#[derive(Debug, Clone, Serialize)]
pub struct TuneOutcome {
    pub trials: Vec<Trial>,
    /// Index of the best trial (highest objective; earliest wins ties).
    pub best_index: usize,
}

impl TuneOutcome {
    fn from_trials(trials: Vec<Trial>) -> Result<TuneOutcome> {
        if trials.is_empty() {
            return Err(Error::Training("a search produced zero trials".into()));
        }
        let mut best_index = 0;
        for (i, trial) in trials.iter().enumerate() {
            if trial.objective > trials[best_index].objective {
                best_index = i;
            }
        }
        Ok(TuneOutcome { trials, best_index })
    }

    pub fn best(&self) -> &Trial {
        &self.trials[self.best_index]
    }

    /// Deterministic pretty-printed trial log (timings excluded).
    pub fn stable_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Training(format!("trial log serialization failed: {e}")))
    }

    /// Per-trial wall-clock seconds, for a separate timing sidecar.
    pub fn timing_json(&self) -> Result<String> {
        let seconds: Vec<f64> = self.trials.iter().map(|t| t.elapsed_seconds).collect();
        serde_json::to_string_pretty(&serde_json::json!({ "trial_seconds": seconds }))
            .map_err(|e| Error::Training(format!("timing serialization failed: {e}")))
    }
}

// ---------------------------------------------------------------------------
// The objective
// ---------------------------------------------------------------------------

/// The samples a search is allowed to look at, with their dataset context.
struct TunePool {
    records: Vec<SampleRecord>,
    classes: Vec<String>,
    payload_kind: PayloadKind,
    dims: PayloadDims,
}

/// Restrict tuning to the training side of the protocol's first fold.
fn tuning_pool(dataset: &Dataset, config: &PipelineConfig, seed: u64) -> Result<TunePool> {
    let plan = plan_split(&dataset.samples, config.protocol, seed)?;
    let first = plan.folds.first().ok_or_else(|| {
        Error::Protocol(format!("protocol {} produced no folds", config.protocol))
    })?;
    let train_ids: HashSet<&str> = first.train.iter().map(String::as_str).collect();
    let records: Vec<SampleRecord> =
        dataset.samples.iter().filter(|s| train_ids.contains(s.id.as_str())).cloned().collect();
    Ok(TunePool {
        records,
        classes: dataset.classes.clone(),
        payload_kind: dataset.payload_kind,
        dims: dataset.dims,
    })
}

/// Stratified k-fold over the pool: per class, shuffle then deal round-robin.
/// Demands at least `k` members per class so every fold sees every class on
/// both sides of the split.
fn validation_folds(records: &[SampleRecord], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, sample) in records.iter().enumerate() {
        by_class.entry(sample.label_index).or_default().push(i);
    }
    let mut stream = RngStream::new(seed);
    let mut test_sets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (label, mut group) in by_class {
        if group.len() < k {
            return Err(Error::Protocol(format!(
                "{k}-fold validation needs at least {k} tuning samples per class, \
                 class {label} has {}",
                group.len()
            )));
        }
        stream.shuffle(&mut group);
        for (i, sample) in group.into_iter().enumerate() {
            test_sets[i % k].push(sample);
        }
    }
    let mut folds = Vec::with_capacity(k);
    for (f, mut test) in test_sets.into_iter().enumerate() {
        test.sort_unstable();
        let in_test: HashSet<usize> = test.iter().copied().collect();
        folds.push(Fold {
            name: format!("validation-{f}"),
            train: (0..records.len())
                .filter(|i| !in_test.contains(i))
                .map(|i| records[i].id.clone())
                .collect(),
            test: test.into_iter().map(|i| records[i].id.clone()).collect(),
        });
    }
    Ok(folds)
}

/// Mean stratified-3-fold validation accuracy of `config` on the pool.
fn trial_objective(config: &PipelineConfig, pool: &TunePool, seed: u64) -> Result<f64> {
    let folds =
        validation_folds(&pool.records, VALIDATION_FOLDS, derive_seed(seed, "tune-validation"))?;
    let plan = SplitPlan { protocol: config.protocol, seed, folds };
    let embedder = PipelineEmbedder::new(config, pool.payload_kind, &pool.dims)?;
    let trainer = PipelineTrainer::new(config, pool.classes.clone());
    let report = run_eval(&pool.records, &pool.classes, &plan, &embedder, &trainer)?;
    Ok(report.mean_accuracy)
}

fn run_trial(index: usize, config: PipelineConfig, pool: &TunePool, seed: u64) -> Trial {
    let start = Instant::now();
    match trial_objective(&config, pool, seed) {
        Ok(objective) => Trial {
            index,
            config,
            objective,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            error: None,
        },
        Err(e) => Trial {
            index,
            config,
            objective: 0.0,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            error: Some(e.to_string()),
        },
    }
}

fn run_trials(
    points: Vec<(ReservoirSettings, f64)>,
    base: &PipelineConfig,
    pool: &TunePool,
    seed: u64,
) -> Result<TuneOutcome> {
    let trials: Vec<Trial> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, (reservoir, lambda))| {
            let config = PipelineConfig { reservoir, lambda, seed, ..base.clone() };
            run_trial(index, config, pool, seed)
        })
        .collect();
    TuneOutcome::from_trials(trials)
}

// ---------------------------------------------------------------------------
// Search strategies
// ---------------------------------------------------------------------------

/// Evaluate `budget` independent draws from `space` and return every trial.
///
/// `base` supplies everything the space does not vary (architecture, readout,
/// protocol, normalization); `seed` governs the draws, the tuning split, and
/// each trial's own config seed, so the whole search is a pure function of
/// its arguments. Ties go to the earliest trial.
pub fn random_search(
    space: &SearchSpace,
    budget: usize,
    dataset: &Dataset,
    base: &PipelineConfig,
    seed: u64,
) -> Result<TuneOutcome> {
    space.validate()?;
    base.validate()?;
    if budget == 0 {
        return Err(Error::Parameter { name: "budget", detail: "must be ≥ 1".into() });
    }
    let pool = tuning_pool(dataset, base, seed)?;
    let mut rng = RngStream::new(derive_seed(seed, "tune-random"));
    let points: Vec<(ReservoirSettings, f64)> =
        (0..budget).map(|_| space.sample(&mut rng)).collect();
    run_trials(points, base, &pool, seed)
}

/// Evaluate every point of `grid` in lexicographic order.
///
/// Fully deterministic: the tuning split and the trial configs reuse
/// `base.seed`.
pub fn grid_search(grid: &GridSpec, dataset: &Dataset, base: &PipelineConfig) -> Result<TuneOutcome> {
    grid.validate()?;
    base.validate()?;
    let pool = tuning_pool(dataset, base, base.seed)?;
    run_trials(grid.points(), base, &pool, base.seed)
}
