//! End-to-end gesture classification pipeline.
//!
//! This module wires the lower layers together: a [`PipelineConfig`] names an
//! architecture (one wide reservoir over stacked maps, or one small reservoir
//! per map), reservoir settings, and a readout; [`train`] turns a config plus
//! a [`Dataset`] into a [`TrainedModel`]; [`evaluate`] runs the configured
//! split protocol and returns the pooled report. Trained models serialize to
//! a single binary file (shared container header, kind 3) with an FNV-1a
//! checksum, and reload bit-exactly: a reloaded model produces the same
//! label and the same score vector for every input as the model that was
//! saved.
//!
//! Randomness is governed by a single `seed` in the config. Reservoir weights
//! are drawn from `derive_seed(seed, "reservoir-weights")`; with
//! `reseed_per_fold` enabled, each evaluation fold re-derives its own weight
//! seed so fold results do not share a single weight draw.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::ReservoirBank;
use crate::dataset::{
    check_payload_dims, write_atomic, Dataset, Payload, PayloadDims, PayloadKind, SampleRecord,
    CONTAINER_MAGIC, CONTAINER_VERSION,
};
use crate::error::{Error, Result};
use crate::eval::{
    plan_split, run_eval, EvalReport, ReadoutTrainer, StateEmbedder, StatePredictor, Protocol,
};
use crate::feature::{
    extract_all, normalize, stack_maps, FeatureKind, FeatureMap, Normalization,
};
use crate::forest::{forest_fit, ForestConfig, ForestModel};
use crate::linalg::DenseMatrix;
use crate::reservoir::{Reservoir, ReservoirSpec};
use crate::ridge::{expanded_dim, fit_ridge, DesignMatrices, Expansion, RidgeReadout};
use crate::rng::{derive_seed, fnv1a64};
use crate::Matrix;
use crate::svm::{svm_fit, SvmConfig, SvmModel};

/// Container kind code for trained-model files (payloads use 1 and 2).
pub const MODEL_KIND_CODE: u32 = 3;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// How feature maps reach the reservoir layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Stack every map channel-wise and drive one wide reservoir.
    Single,
    /// Give each map its own small reservoir; concatenate the final states.
    Multi,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::Single, Architecture::Multi];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Single => "single",
            Architecture::Multi => "multi",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Architecture> {
        match s {
            "single" => Ok(Architecture::Single),
            "multi" => Ok(Architecture::Multi),
            other => Err(Error::Parameter {
                name: "architecture",
                detail: format!("unknown architecture {other:?}; expected single or multi"),
            }),
        }
    }
}

/// Which classifier reads the final reservoir state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    /// Ridge regression on the raw state.
    RrL,
    /// Ridge regression on the tanh-expanded state `[1, r, tanh(r)]`.
    RrN,
    /// One-vs-one RBF support vector machine.
    Svm,
    /// Random forest.
    Rf,
}

impl ReadoutKind {
    pub const ALL: [ReadoutKind; 4] =
        [ReadoutKind::RrL, ReadoutKind::RrN, ReadoutKind::Svm, ReadoutKind::Rf];

    pub fn name(self) -> &'static str {
        match self {
            ReadoutKind::RrL => "rr_l",
            ReadoutKind::RrN => "rr_n",
            ReadoutKind::Svm => "svm",
            ReadoutKind::Rf => "rf",
        }
    }
}

impl fmt::Display for ReadoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReadoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReadoutKind> {
        match s {
            "rr_l" => Ok(ReadoutKind::RrL),
            "rr_n" => Ok(ReadoutKind::RrN),
            "svm" => Ok(ReadoutKind::Svm),
            "rf" => Ok(ReadoutKind::Rf),
            other => Err(Error::Parameter {
                name: "readout",
                detail: format!("unknown readout {other:?}; expected rr_l, rr_n, svm, or rf"),
            }),
        }
    }
}

/// Reservoir hyperparameters shared by every reservoir the pipeline builds.
///
/// This is [`ReservoirSpec`] minus the input dimension and the seed, which the
/// pipeline fills in per architecture: the single-reservoir layout takes the
/// total stacked channel count, the multi-reservoir layout one reservoir per
/// map with that map's channel count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirSettings {
    pub nodes: usize,
    pub spectral_radius_target: f64,
    pub input_scaling: f64,
    pub density: f64,
    pub leaking_rate: f64,
}

impl Default for ReservoirSettings {
    fn default() -> Self {
        ReservoirSettings {
            nodes: 50,
            spectral_radius_target: 0.95,
            input_scaling: 1.0,
            density: 0.9,
            leaking_rate: 0.0263,
        }
    }
}

impl ReservoirSettings {
    /// Complete the settings into a buildable spec.
    pub fn to_spec(self, input_dim: usize, seed: u64) -> ReservoirSpec {
        ReservoirSpec {
            nodes: self.nodes,
            input_dim,
            spectral_radius_target: self.spectral_radius_target,
            input_scaling: self.input_scaling,
            density: self.density,
            leaking_rate: self.leaking_rate,
            seed,
        }
    }
}

/// Everything needed to train, evaluate, and re-run a classifier.
///
/// Deserializes from JSON with every field optional (missing fields take the
/// defaults below) and unknown fields rejected, so config files stay honest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub architecture: Architecture,
    pub reservoir: ReservoirSettings,
    pub readout: ReadoutKind,
    /// Ridge regularization strength; used by the `rr_l` and `rr_n` readouts.
    pub lambda: f64,
    /// SVM training knobs; used by the `svm` readout.
    pub svm: SvmConfig,
    /// Forest training knobs; used by the `rf` readout.
    pub forest: ForestConfig,
    pub normalization: Normalization,
    pub protocol: Protocol,
    /// Master seed: weight draws, split shuffles, and the forest's bootstrap
    /// sampling are all derived from it.
    pub seed: u64,
    /// Rebuild reservoir weights from a fresh derived seed for every
    /// evaluation fold instead of sharing one draw across folds.
    pub reseed_per_fold: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            architecture: Architecture::Multi,
            reservoir: ReservoirSettings::default(),
            readout: ReadoutKind::RrN,
            lambda: 0.1,
            svm: SvmConfig::default(),
            forest: ForestConfig::default(),
            normalization: Normalization::PerSampleMax,
            protocol: Protocol::Holdout5050,
            seed: 0,
            reseed_per_fold: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        // Reservoir knobs share the spec's own validation; input_dim/seed are
        // placeholders here.
        self.reservoir.to_spec(1, 0).validate()?;
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Parameter {
                name: "lambda",
                detail: format!("must be a positive finite number, got {}", self.lambda),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Map layout
// ---------------------------------------------------------------------------

/// One feature map the pipeline will extract from each sample, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDescriptor {
    pub kind: FeatureKind,
    /// Antenna the map is computed from; absent for precomputed maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna: Option<u32>,
    /// Channels per time step.
    pub channels: u32,
}

/// The ordered list of maps a payload of this shape yields.
///
/// Range-Doppler sequences yield a range-time and a Doppler-time map per
/// antenna, in antenna order; micro-Doppler payloads pass through as a single
/// map. `dims` is assumed validated against `kind`.
pub fn plan_maps(kind: PayloadKind, dims: &PayloadDims) -> Vec<MapDescriptor> {
    match kind {
        PayloadKind::Rdm => {
            let antennas = dims.antennas.unwrap_or(0);
            let range_bins = dims.range_bins.unwrap_or(0);
            let mut out = Vec::with_capacity(2 * antennas as usize);
            for a in 0..antennas {
                out.push(MapDescriptor {
                    kind: FeatureKind::RangeTime,
                    antenna: Some(a),
                    channels: range_bins,
                });
                out.push(MapDescriptor {
                    kind: FeatureKind::DopplerTime,
                    antenna: Some(a),
                    channels: dims.doppler_bins,
                });
            }
            out
        }
        PayloadKind::Mdm => vec![MapDescriptor {
            kind: FeatureKind::MicroDoppler,
            antenna: None,
            channels: dims.doppler_bins,
        }],
    }
}

/// Extract and normalize the feature maps of one payload, in layout order.
pub fn sample_maps(payload: &Payload, scheme: Normalization) -> Vec<FeatureMap> {
    match payload {
        Payload::Rdm(rdm) => {
            let mut maps = extract_all(rdm);
            for map in &mut maps {
                normalize(map, scheme);
            }
            maps
        }
        Payload::Mdm(map) => {
            let mut map = map.clone();
            normalize(&mut map, scheme);
            vec![map]
        }
    }
}

/// Dimension of the state vector the readout will see, before any expansion.
pub fn readout_input_dim(config: &PipelineConfig, kind: PayloadKind, dims: &PayloadDims) -> usize {
    match config.architecture {
        Architecture::Single => config.reservoir.nodes,
        Architecture::Multi => config.reservoir.nodes * plan_maps(kind, dims).len(),
    }
}

// ---------------------------------------------------------------------------
// Engine: the reservoir layer under either architecture
// ---------------------------------------------------------------------------

/// The reservoir layer, built for one payload shape.
#[derive(Debug, Clone)]
pub enum Engine {
    Single(Reservoir),
    Multi(ReservoirBank),
}

impl Engine {
    /// Build the reservoir layer for payloads of the given shape.
    pub fn build(
        config: &PipelineConfig,
        kind: PayloadKind,
        dims: &PayloadDims,
        seed: u64,
    ) -> Result<Engine> {
        let channels: Vec<usize> =
            plan_maps(kind, dims).iter().map(|m| m.channels as usize).collect();
        match config.architecture {
            Architecture::Single => {
                let input_dim = channels.iter().sum();
                let spec = config.reservoir.to_spec(input_dim, seed);
                Ok(Engine::Single(Reservoir::build(spec)?))
            }
            Architecture::Multi => {
                // Input dim is a placeholder; the bank substitutes each map's
                // channel count (and offsets the seed per reservoir).
                let base = config.reservoir.to_spec(1, seed);
                Ok(Engine::Multi(ReservoirBank::build(&base, &channels)?))
            }
        }
    }

    /// Run one sample's maps to the final unified state.
    pub fn embed(&self, maps: &[FeatureMap]) -> Result<Vec<f64>> {
        match self {
            Engine::Single(reservoir) => {
                let stacked = stack_maps(maps)?;
                Ok(reservoir.run(&stacked)?.into_values())
            }
            Engine::Multi(bank) => Ok(bank.run(maps)?.into_values()),
        }
    }

    /// Length of the state vector [`Engine::embed`] produces.
    pub fn unified_dim(&self) -> usize {
        match self {
            Engine::Single(reservoir) => reservoir.spec().nodes,
            Engine::Multi(bank) => bank.unified_dim(),
        }
    }

    pub fn reservoirs(&self) -> &[Reservoir] {
        match self {
            Engine::Single(reservoir) => std::slice::from_ref(reservoir),
            Engine::Multi(bank) => bank.reservoirs(),
        }
    }

    fn architecture(&self) -> Architecture {
        match self {
            Engine::Single(_) => Architecture::Single,
            Engine::Multi(_) => Architecture::Multi,
        }
    }

    fn from_reservoir_list(architecture: Architecture, list: Vec<Reservoir>) -> Result<Engine> {
        match architecture {
            Architecture::Single => {
                if list.len() != 1 {
                    return Err(Error::Training(format!(
                        "a single-reservoir model must store exactly 1 reservoir, found {}",
                        list.len()
                    )));
                }
                Ok(Engine::Single(list.into_iter().next().expect("length checked")))
            }
            Architecture::Multi => Ok(Engine::Multi(ReservoirBank::from_reservoirs(list)?)),
        }
    }

    /// Check that the stored reservoirs accept maps of the given layout.
    fn check_layout(&self, layout: &[MapDescriptor]) -> Result<()> {
        let channels: Vec<usize> = layout.iter().map(|m| m.channels as usize).collect();
        match self {
            Engine::Single(reservoir) => {
                let total: usize = channels.iter().sum();
                if reservoir.spec().input_dim != total {
                    return Err(Error::Training(format!(
                        "reservoir takes {} input channels but the map layout stacks to {total}",
                        reservoir.spec().input_dim
                    )));
                }
            }
            Engine::Multi(bank) => {
                if bank.expected_channels() != channels {
                    return Err(Error::Training(format!(
                        "reservoir bank expects maps of {:?} channels but the layout declares {channels:?}",
                        bank.expected_channels()
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Readout layer
// ---------------------------------------------------------------------------

/// A trained readout of any supported kind.
#[derive(Debug, Clone)]
pub enum ReadoutModel {
    Ridge(RidgeReadout),
    Svm(SvmModel),
    Forest(ForestModel),
}

impl ReadoutModel {
    pub fn kind(&self) -> ReadoutKind {
        match self {
            ReadoutModel::Ridge(r) => match r.expansion {
                Expansion::Linear => ReadoutKind::RrL,
                Expansion::TanhExpanded => ReadoutKind::RrN,
            },
            ReadoutModel::Svm(_) => ReadoutKind::Svm,
            ReadoutModel::Forest(_) => ReadoutKind::Rf,
        }
    }

    /// Predicted label index plus one score per class.
    ///
    /// Scores are the readout's native evidence — linear outputs for ridge,
    /// pairwise votes for the SVM, tree votes for the forest — so they are
    /// comparable within a prediction but not across readout kinds.
    pub fn predict(&self, state: &[f64]) -> Result<(usize, Vec<f64>)> {
        match self {
            ReadoutModel::Ridge(r) => r.predict(state),
            ReadoutModel::Svm(m) => {
                let decisions = m.decision_values(state)?;
                let mut votes = vec![0.0; m.n_classes];
                for (pair, f) in m.pairs.iter().zip(&decisions) {
                    let winner = if *f >= 0.0 { pair.class_pos } else { pair.class_neg };
                    votes[winner] += 1.0;
                }
                Ok((m.predict(state)?, votes))
            }
            ReadoutModel::Forest(f) => {
                let votes = f.votes(state)?;
                Ok((f.predict(state)?, votes.into_iter().map(|v| v as f64).collect()))
            }
        }
    }

    fn n_classes(&self) -> usize {
        match self {
            ReadoutModel::Ridge(r) => r.w_out.rows(),
            ReadoutModel::Svm(m) => m.n_classes,
            ReadoutModel::Forest(f) => f.n_classes,
        }
    }

    /// State dimension this readout was trained on.
    fn state_dim(&self) -> Option<usize> {
        match self {
            // The expanded width 1 + 2N inverts uniquely; linear is identity.
            ReadoutModel::Ridge(r) => match r.expansion {
                Expansion::Linear => Some(r.w_out.cols()),
                Expansion::TanhExpanded => {
                    let cols = r.w_out.cols();
                    if cols % 2 == 1 && cols >= 3 {
                        Some((cols - 1) / 2)
                    } else {
                        None
                    }
                }
            },
            ReadoutModel::Svm(m) => Some(m.feature_dim),
            ReadoutModel::Forest(f) => Some(f.feature_dim),
        }
    }
}

fn fit_readout(
    config: &PipelineConfig,
    states: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    class_names: &[String],
) -> Result<ReadoutModel> {
    match config.readout {
        ReadoutKind::RrL | ReadoutKind::RrN => {
            let expansion = match config.readout {
                ReadoutKind::RrL => Expansion::Linear,
                _ => Expansion::TanhExpanded,
            };
            let design = DesignMatrices::assemble(states, labels, n_classes, expansion)?;
            let mut readout = fit_ridge(&design, config.lambda)?;
            readout.class_names = class_names.to_vec();
            Ok(ReadoutModel::Ridge(readout))
        }
        ReadoutKind::Svm => {
            let mut model = svm_fit(states, labels, n_classes, &config.svm)?;
            model.class_names = class_names.to_vec();
            Ok(ReadoutModel::Svm(model))
        }
        ReadoutKind::Rf => {
            let mut model = forest_fit(states, labels, n_classes, &config.forest)?;
            model.class_names = class_names.to_vec();
            Ok(ReadoutModel::Forest(model))
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation seams
// ---------------------------------------------------------------------------

fn embed_sample(
    engine: &Engine,
    config: &PipelineConfig,
    expected_kind: PayloadKind,
    sample: &SampleRecord,
) -> Result<Vec<f64>> {
    let fail = |detail: String| Error::Sample { id: sample.id.clone(), detail };
    let payload = sample.payload.get().map_err(|e| fail(e.to_string()))?;
    if payload.kind() != expected_kind {
        return Err(fail(format!(
            "payload kind {} does not match the pipeline's {}",
            payload.kind(),
            expected_kind
        )));
    }
    let maps = sample_maps(&payload, config.normalization);
    engine.embed(&maps).map_err(|e| fail(e.to_string()))
}

/// [`StateEmbedder`] that builds (and caches) the reservoir layer per fold.
///
/// With `reseed_per_fold` off, every fold shares one engine; with it on, fold
/// `f` gets weights drawn from `derive_seed(weights_seed, "fold-{f}")`. Only
/// the most recently used engine is kept — folds run sequentially, and a
/// reseeding evaluation would otherwise pile up one full weight set per fold.
pub struct PipelineEmbedder {
    config: PipelineConfig,
    payload_kind: PayloadKind,
    dims: PayloadDims,
    weights_seed: u64,
    engine: Mutex<Option<(u64, Arc<Engine>)>>,
}

impl PipelineEmbedder {
    pub fn new(
        config: &PipelineConfig,
        payload_kind: PayloadKind,
        dims: &PayloadDims,
    ) -> Result<PipelineEmbedder> {
        config.validate()?;
        dims.validate(payload_kind)?;
        Ok(PipelineEmbedder {
            config: config.clone(),
            payload_kind,
            dims: dims.clone(),
            weights_seed: derive_seed(config.seed, "reservoir-weights"),
            engine: Mutex::new(None),
        })
    }

    fn fold_seed(&self, fold: usize) -> u64 {
        if self.config.reseed_per_fold {
            derive_seed(self.weights_seed, &format!("fold-{fold}"))
        } else {
            self.weights_seed
        }
    }

    fn engine_for_fold(&self, fold: usize) -> Result<Arc<Engine>> {
        let seed = self.fold_seed(fold);
        let mut cache = self
            .engine
            .lock()
            .map_err(|_| Error::Training("reservoir cache lock poisoned".into()))?;
        if let Some((cached_seed, engine)) = cache.as_ref() {
            if *cached_seed == seed {
                return Ok(Arc::clone(engine));
            }
        }
        let engine =
            Arc::new(Engine::build(&self.config, self.payload_kind, &self.dims, seed)?);
        *cache = Some((seed, Arc::clone(&engine)));
        Ok(engine)
    }
}

impl fmt::Debug for PipelineEmbedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PipelineEmbedder")
            .field("payload_kind", &self.payload_kind)
            .field("weights_seed", &self.weights_seed)
            .finish_non_exhaustive()
    }
}

impl StateEmbedder for PipelineEmbedder {
    fn embed(&self, fold: usize, sample: &SampleRecord) -> Result<Vec<f64>> {
        let engine = self.engine_for_fold(fold)?;
        embed_sample(&engine, &self.config, self.payload_kind, sample)
    }

    /// Folds embedding with the same weight seed embed identically.
    fn fold_key(&self, fold: usize) -> u64 {
        self.fold_seed(fold)
    }
}

/// [`ReadoutTrainer`] dispatching on the config's readout kind.
#[derive(Debug, Clone)]
pub struct PipelineTrainer {
    config: PipelineConfig,
    class_names: Vec<String>,
}

impl PipelineTrainer {
    pub fn new(config: &PipelineConfig, class_names: Vec<String>) -> PipelineTrainer {
        PipelineTrainer { config: config.clone(), class_names }
    }
}

impl ReadoutTrainer for PipelineTrainer {
    fn fit(
        &self,
        states: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
    ) -> Result<Box<dyn StatePredictor>> {
        if n_classes != self.class_names.len() {
            return Err(Error::Training(format!(
                "trainer was given {} class names but the fold has {n_classes} classes",
                self.class_names.len()
            )));
        }
        let readout = fit_readout(&self.config, states, labels, n_classes, &self.class_names)?;
        Ok(Box::new(ReadoutPredictor { readout }))
    }
}

#[derive(Debug)]
struct ReadoutPredictor {
    readout: ReadoutModel,
}

impl StatePredictor for ReadoutPredictor {
    fn predict(&self, state: &[f64]) -> Result<usize> {
        Ok(self.readout.predict(state)?.0)
    }
}

/// Run the config's split protocol over a dataset and pool the fold results.
pub fn evaluate(config: &PipelineConfig, dataset: &Dataset) -> Result<EvalReport> {
    config.validate()?;
    let plan = plan_split(&dataset.samples, config.protocol, config.seed)?;
    let embedder = PipelineEmbedder::new(config, dataset.payload_kind, &dataset.dims)?;
    let trainer = PipelineTrainer::new(config, dataset.classes.clone());
    run_eval(&dataset.samples, &dataset.classes, &plan, &embedder, &trainer)
}

// ---------------------------------------------------------------------------
// Training and prediction
// ---------------------------------------------------------------------------

/// A prediction for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label_index: usize,
    pub label: String,
    /// One score per class, in class order (see [`ReadoutModel::predict`]).
    pub scores: Vec<f64>,
}

/// A fully trained classifier: reservoir layer plus fitted readout.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    config: PipelineConfig,
    classes: Vec<String>,
    payload_kind: PayloadKind,
    dims: PayloadDims,
    map_layout: Vec<MapDescriptor>,
    engine: Engine,
    readout: ReadoutModel,
    train_accuracy: f64,
}

/// Fit a model on every sample of `dataset` under `config`.
pub fn train(config: &PipelineConfig, dataset: &Dataset) -> Result<TrainedModel> {
    config.validate()?;
    if dataset.samples.is_empty() {
        return Err(Error::Training("cannot train on an empty dataset".into()));
    }
    let weights_seed = derive_seed(config.seed, "reservoir-weights");
    let engine = Engine::build(config, dataset.payload_kind, &dataset.dims, weights_seed)?;
    let states: Vec<Vec<f64>> = dataset
        .samples
        .par_iter()
        .map(|sample| embed_sample(&engine, config, dataset.payload_kind, sample))
        .collect::<Result<_>>()?;
    let labels: Vec<usize> = dataset.samples.iter().map(|s| s.label_index).collect();
    let readout = fit_readout(config, &states, &labels, dataset.n_classes(), &dataset.classes)?;
    let mut correct = 0usize;
    for (state, &label) in states.iter().zip(&labels) {
        if readout.predict(state)?.0 == label {
            correct += 1;
        }
    }
    Ok(TrainedModel {
        config: config.clone(),
        classes: dataset.classes.clone(),
        payload_kind: dataset.payload_kind,
        dims: dataset.dims.clone(),
        map_layout: plan_maps(dataset.payload_kind, &dataset.dims),
        engine,
        readout,
        train_accuracy: correct as f64 / states.len() as f64,
    })
}

impl TrainedModel {
    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn payload_kind(&self) -> PayloadKind {
        self.payload_kind
    }

    pub fn dims(&self) -> &PayloadDims {
        &self.dims
    }

    pub fn map_layout(&self) -> &[MapDescriptor] {
        &self.map_layout
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn readout(&self) -> &ReadoutModel {
        &self.readout
    }

    /// Fraction of the training set the fitted readout labels correctly.
    pub fn train_accuracy(&self) -> f64 {
        self.train_accuracy
    }

    /// Classify one payload, first checking it matches the trained shape.
    pub fn predict_payload(&self, payload: &Payload) -> Result<Prediction> {
        check_payload_dims(payload, self.payload_kind, &self.dims)
            .map_err(|e| Error::Dataset(format!("input does not fit this model: {e}")))?;
        let maps = sample_maps(payload, self.config.normalization);
        let state = self.engine.embed(&maps)?;
        let (label_index, scores) = self.readout.predict(&state)?;
        Ok(Prediction { label_index, label: self.classes[label_index].clone(), scores })
    }

    /// Classify one dataset record, tagging errors with the sample id.
    pub fn predict_sample(&self, sample: &SampleRecord) -> Result<Prediction> {
        let payload = sample
            .payload
            .get()
            .map_err(|e| Error::Sample { id: sample.id.clone(), detail: e.to_string() })?;
        self.predict_payload(&payload)
            .map_err(|e| Error::Sample { id: sample.id.clone(), detail: e.to_string() })
    }

    /// Serialize to one self-checking binary file (written atomically).
    ///
    /// Layout: the shared 16-byte container header with kind
    /// [`MODEL_KIND_CODE`], a little-endian u64 body length, a JSON body, and
    /// a trailing little-endian FNV-1a checksum of all preceding bytes.
    /// Serialization is deterministic: saving the same model twice yields
    /// byte-identical files.
    pub fn save(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_vec(&ModelJson::from_model(self)).map_err(|e| {
            Error::Training(format!("model serialization failed: {e}"))
        })?;
        let mut bytes = Vec::with_capacity(32 + body.len());
        bytes.extend_from_slice(CONTAINER_MAGIC);
        bytes.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        bytes.extend_from_slice(&MODEL_KIND_CODE.to_le_bytes());
        bytes.extend_from_slice(&(body.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&body);
        bytes.extend_from_slice(&fnv1a64(&bytes).to_le_bytes());
        write_atomic(path, &bytes)
    }

    /// Reload a model saved by [`TrainedModel::save`], verifying the header,
    /// the checksum, and the internal shape consistency of every part.
    pub fn load(path: &Path) -> Result<TrainedModel> {
        let fail = |detail: String| Error::Format { path: path.display().to_string(), detail };
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        if bytes.len() < 32 {
            return Err(fail(format!("{} bytes is too short to be a model file", bytes.len())));
        }
        if &bytes[0..8] != CONTAINER_MAGIC {
            return Err(fail("bad magic; not a model or payload container".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CONTAINER_VERSION {
            return Err(fail(format!(
                "container version {version}, this build reads version {CONTAINER_VERSION}"
            )));
        }
        let kind = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
        if kind != MODEL_KIND_CODE {
            return Err(fail(format!(
                "container kind {kind} is not a trained model (expected {MODEL_KIND_CODE})"
            )));
        }
        let body_len = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
        let expected_total = 24usize
            .checked_add(body_len)
            .and_then(|n| n.checked_add(8))
            .ok_or_else(|| fail("declared body length overflows".into()))?;
        if bytes.len() != expected_total {
            return Err(fail(format!(
                "file has {} bytes but the header declares {expected_total}; truncated or padded",
                bytes.len()
            )));
        }
        let stored = u64::from_le_bytes(bytes[24 + body_len..].try_into().expect("8 bytes"));
        let actual = fnv1a64(&bytes[..24 + body_len]);
        if stored != actual {
            return Err(fail(format!(
                "checksum mismatch (stored {stored:#018x}, computed {actual:#018x}); file is corrupted"
            )));
        }
        let json: ModelJson = serde_json::from_slice(&bytes[24..24 + body_len])
            .map_err(|e| fail(format!("model body is not valid JSON: {e}")))?;
        json.into_model().map_err(|e| fail(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Model (de)serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ReservoirJson {
    spec: ReservoirSpec,
    achieved_rho: f64,
    /// Input weights, row-major `nodes × input_dim`.
    w_in: Vec<f64>,
    /// Coupling weights, row-major `nodes × nodes`.
    w_res: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ReadoutJson {
    Ridge {
        lambda: f64,
        expansion: Expansion,
        class_names: Vec<String>,
        train_residual: f64,
        classes: usize,
        features: usize,
        /// Output weights, row-major `classes × features`.
        weights: Vec<f64>,
    },
    Svm(SvmModel),
    Forest(ForestModel),
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    config: PipelineConfig,
    classes: Vec<String>,
    payload_kind: PayloadKind,
    dims: PayloadDims,
    map_layout: Vec<MapDescriptor>,
    train_accuracy: f64,
    reservoirs: Vec<ReservoirJson>,
    readout: ReadoutJson,
}

impl ModelJson {
    fn from_model(model: &TrainedModel) -> ModelJson {
        let reservoirs = model
            .engine
            .reservoirs()
            .iter()
            .map(|r| ReservoirJson {
                spec: r.spec().clone(),
                achieved_rho: r.achieved_rho(),
                w_in: r.w_in().data().to_vec(),
                w_res: r.w_res().data().to_vec(),
            })
            .collect();
        let readout = match &model.readout {
            ReadoutModel::Ridge(r) => ReadoutJson::Ridge {
                lambda: r.lambda,
                expansion: r.expansion,
                class_names: r.class_names.clone(),
                train_residual: r.train_residual,
                classes: r.w_out.rows(),
                features: r.w_out.cols(),
                weights: r.w_out.data().to_vec(),
            },
            ReadoutModel::Svm(m) => ReadoutJson::Svm(m.clone()),
            ReadoutModel::Forest(f) => ReadoutJson::Forest(f.clone()),
        };
        ModelJson {
            config: model.config.clone(),
            classes: model.classes.clone(),
            payload_kind: model.payload_kind,
            dims: model.dims.clone(),
            map_layout: model.map_layout.clone(),
            train_accuracy: model.train_accuracy,
            reservoirs,
            readout,
        }
    }

    fn into_model(self) -> Result<TrainedModel> {
        self.config.validate()?;
        self.dims.validate(self.payload_kind)?;
        if self.classes.is_empty() {
            return Err(Error::Training("model stores no class names".into()));
        }
        let mut reservoirs = Vec::with_capacity(self.reservoirs.len());
        for r in self.reservoirs {
            let nodes = r.spec.nodes;
            let input_dim = r.spec.input_dim;
            let w_in: Matrix = DenseMatrix::from_vec(nodes, input_dim, r.w_in)?;
            let w_res: Matrix = DenseMatrix::from_vec(nodes, nodes, r.w_res)?;
            reservoirs.push(Reservoir::from_parts(r.spec, w_in, w_res, r.achieved_rho)?);
        }
        let engine = Engine::from_reservoir_list(self.config.architecture, reservoirs)?;
        if engine.architecture() != self.config.architecture {
            return Err(Error::Training("stored architecture is inconsistent".into()));
        }
        let expected_layout = plan_maps(self.payload_kind, &self.dims);
        if expected_layout != self.map_layout {
            return Err(Error::Training(
                "stored map layout does not match the stored payload shape".into(),
            ));
        }
        engine.check_layout(&self.map_layout)?;
        let readout = match self.readout {
            ReadoutJson::Ridge {
                lambda,
                expansion,
                class_names,
                train_residual,
                classes,
                features,
                weights,
            } => {
                if expanded_dim(engine.unified_dim(), expansion) != features {
                    return Err(Error::Training(format!(
                        "readout expects {features} features but the reservoirs produce {}",
                        expanded_dim(engine.unified_dim(), expansion)
                    )));
                }
                ReadoutModel::Ridge(RidgeReadout {
                    w_out: DenseMatrix::from_vec(classes, features, weights)?,
                    lambda,
                    expansion,
                    class_names,
                    train_residual,
                })
            }
            ReadoutJson::Svm(m) => ReadoutModel::Svm(m),
            ReadoutJson::Forest(f) => ReadoutModel::Forest(f),
        };
        if let Some(dim) = readout.state_dim() {
            if dim != engine.unified_dim() {
                return Err(Error::Training(format!(
                    "readout was trained on {dim}-dimensional states but the reservoirs produce {}",
                    engine.unified_dim()
                )));
            }
        }
        if readout.n_classes() != self.classes.len() {
            return Err(Error::Training(format!(
                "readout separates {} classes but the model names {}",
                readout.n_classes(),
                self.classes.len()
            )));
        }
        Ok(TrainedModel {
            config: self.config,
            classes: self.classes,
            payload_kind: self.payload_kind,
            dims: self.dims,
            map_layout: self.map_layout,
            engine,
            readout,
            train_accuracy: self.train_accuracy,
        })
    }
}
