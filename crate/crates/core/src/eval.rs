//! Evaluation protocols, accuracy/confusion metrics, and wall-clock timing.
//!
//! Four split protocols are supported: a stratified 50:50 holdout, a
//! stratified 10-fold cross-validation, leave-one-subject-out, and a
//! per-subject session-half split. A [`SplitPlan`] stores folds as sample-id
//! lists so it can be logged, inspected, and replayed.
//!
//! [`run_eval`] is written against two small seams — [`StateEmbedder`] turns
//! a sample into a feature vector and [`ReadoutTrainer`] fits a classifier on
//! labeled vectors — so protocol logic can be tested with stub classifiers
//! and the real pipeline plugs in without this module knowing about
//! reservoirs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{PayloadHandle, SampleRecord};
use crate::error::{Error, Result};

/// Evaluation protocol selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    /// Stratified 50:50 train/test split; the odd sample of an odd-count
    /// class goes to the training side.
    #[serde(rename = "holdout-50-50")]
    Holdout5050,
    /// Stratified 10-fold cross-validation; per-class counts across folds
    /// differ by at most one.
    #[serde(rename = "kfold-10")]
    Kfold10,
    /// One fold per subject; that subject's samples are the test set.
    #[serde(rename = "leave-one-subject-out")]
    LeaveOneSubjectOut,
    /// Per subject, sessions are split into two halves; each half is the
    /// test set in turn while the subject's other half trains. Fold
    /// accuracies are averaged uniformly across (subject, half) folds.
    #[serde(rename = "leave-one-session-out")]
    LeaveOneSessionOut,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Holdout5050,
        Protocol::Kfold10,
        Protocol::LeaveOneSubjectOut,
        Protocol::LeaveOneSessionOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Holdout5050 => "holdout-50-50",
            Protocol::Kfold10 => "kfold-10",
            Protocol::LeaveOneSubjectOut => "leave-one-subject-out",
            Protocol::LeaveOneSessionOut => "leave-one-session-out",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Protocol> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parameter {
                name: "protocol".into(),
                detail: format!(
                    "unknown protocol {s:?}; expected one of {}",
                    Protocol::ALL.map(|p| p.name()).join(", ")
                ),
            })
    }
}

/// One train/test fold, by sample id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fold {
    pub name: String,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// A reproducible split: the protocol, the seed that shaped it, and the
/// resulting folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub protocol: Protocol,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

const KFOLD_FOLDS: usize = 10;

/// Build the fold plan for `protocol` over `records`.
pub fn plan_split(records: &[SampleRecord], protocol: Protocol, seed: u64) -> Result<SplitPlan> {
    if records.is_empty() {
        return Err(Error::Protocol("cannot split an empty record list".into()));
    }
    let folds = match protocol {
        Protocol::Holdout5050 => plan_holdout(records, seed),
        Protocol::Kfold10 => plan_kfold(records, seed)?,
        Protocol::LeaveOneSubjectOut => plan_loso(records)?,
        Protocol::LeaveOneSessionOut => plan_session_out(records)?,
    };
    Ok(SplitPlan { protocol, seed, folds })
}

/// Sample indices grouped by class, in dataset order, then shuffled
/// deterministically per class.
fn shuffled_class_groups(records: &[SampleRecord], seed: u64, tag: &str) -> Vec<Vec<usize>> {
    let n_classes = records.iter().map(|r| r.label_index + 1).max().unwrap_or(0);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, r) in records.iter().enumerate() {
        groups[r.label_index].push(i);
    }
    let mut stream = crate::rng::RngStream::new(crate::rng::derive_seed(seed, tag));
    for group in &mut groups {
        stream.shuffle(group);
    }
    groups
}

fn ids(records: &[SampleRecord], indices: impl IntoIterator<Item = usize>) -> Vec<String> {
    indices.into_iter().map(|i| records[i].id.clone()).collect()
}

fn plan_holdout(records: &[SampleRecord], seed: u64) -> Vec<Fold> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for group in shuffled_class_groups(records, seed, "holdout") {
        let take = group.len().div_ceil(2);
        train.extend_from_slice(&group[..take]);
        test.extend_from_slice(&group[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    vec![Fold { name: "holdout".into(), train: ids(records, train), test: ids(records, test) }]
}

fn plan_kfold(records: &[SampleRecord], seed: u64) -> Result<Vec<Fold>> {
    if records.len() < KFOLD_FOLDS {
        return Err(Error::Protocol(format!(
            "{}-fold split needs at least {} samples, got {}",
            KFOLD_FOLDS,
            KFOLD_FOLDS,
            records.len()
        )));
    }
    let mut test_sets: Vec<Vec<usize>> = vec![Vec::new(); KFOLD_FOLDS];
    for group in shuffled_class_groups(records, seed, "kfold") {
        for (i, sample) in group.into_iter().enumerate() {
            test_sets[i % KFOLD_FOLDS].push(sample);
        }
    }
    let mut folds = Vec::with_capacity(KFOLD_FOLDS);
    for (f, mut test) in test_sets.into_iter().enumerate() {
        test.sort_unstable();
        let in_test: HashSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..records.len()).filter(|i| !in_test.contains(i)).collect();
        folds.push(Fold {
            name: format!("fold-{f:02}"),
            train: ids(records, train),
            test: ids(records, test),
        });
    }
    Ok(folds)
}

fn plan_loso(records: &[SampleRecord]) -> Result<Vec<Fold>> {
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_subject.entry(r.subject.as_str()).or_default().push(i);
    }
    if by_subject.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-subject-out needs at least 2 subjects, got {}",
            by_subject.len()
        )));
    }
    Ok(by_subject
        .iter()
        .map(|(subject, test)| {
            let train: Vec<usize> =
                (0..records.len()).filter(|i| records[*i].subject != *subject).collect();
            Fold {
                name: format!("subject-{subject}"),
                train: ids(records, train),
                test: ids(records, test.iter().copied()),
            }
        })
        .collect())
}

fn plan_session_out(records: &[SampleRecord]) -> Result<Vec<Fold>> {
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_subject.entry(r.subject.as_str()).or_default().push(i);
    }
    let mut folds = Vec::new();
    for (subject, samples) in &by_subject {
        let mut sessions: Vec<&str> =
            samples.iter().map(|&i| records[i].session.as_str()).collect();
        sessions.sort_unstable();
        sessions.dedup();
        if sessions.len() < 2 {
            return Err(Error::Protocol(format!(
                "session split needs at least 2 sessions per subject; subject {subject:?} has {}",
                sessions.len()
            )));
        }
        let first_half: HashSet<&str> =
            sessions[..sessions.len().div_ceil(2)].iter().copied().collect();
        let (a, b): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| first_half.contains(records[i].session.as_str()));
        for (half, test, train) in [(0, &a, &b), (1, &b, &a)] {
            folds.push(Fold {
                name: format!("subject-{subject}-half-{half}"),
                train: ids(records, train.iter().copied()),
                test: ids(records, test.iter().copied()),
            });
        }
    }
    Ok(folds)
}

// --------------------------------------------------------------------------
// Confusion matrices
// --------------------------------------------------------------------------

/// Class-by-class count matrix; rows are the true class, columns the
/// prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    /// Row-major counts, `classes.len()` squared.
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: &[String]) -> ConfusionMatrix {
        ConfusionMatrix { classes: classes.to_vec(), counts: vec![0; classes.len() * classes.len()] }
    }

    /// Count a (true, predicted) pair list into a fresh matrix.
    pub fn from_pairs(
        classes: &[String],
        actual: &[usize],
        predicted: &[usize],
    ) -> Result<ConfusionMatrix> {
        if actual.len() != predicted.len() {
            return Err(Error::Shape {
                op: "confusion".into(),
                detail: format!("{} true labels vs {} predictions", actual.len(), predicted.len()),
            });
        }
        let mut matrix = ConfusionMatrix::new(classes);
        for (&t, &p) in actual.iter().zip(predicted) {
            matrix.record(t, p)?;
        }
        Ok(matrix)
    }

    pub fn record(&mut self, actual: usize, predicted: usize) -> Result<()> {
        let n = self.classes.len();
        if actual >= n || predicted >= n {
            return Err(Error::Protocol(format!(
                "label pair ({actual}, {predicted}) is outside the {n}-class list"
            )));
        }
        self.counts[actual * n + predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.classes.len() + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        let n = self.classes.len();
        (0..n).map(|i| self.counts[i * n + i]).sum()
    }

    /// trace / total; exactly the overall accuracy by construction.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 { 0.0 } else { self.trace() as f64 / total as f64 }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        let n = self.classes.len();
        (0..n).map(|r| self.counts[r * n..(r + 1) * n].iter().sum()).collect()
    }

    /// Row-normalized percentages; all-zero rows stay zero.
    pub fn percentages(&self) -> Vec<f64> {
        let n = self.classes.len();
        let sums = self.row_sums();
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            if sums[r] > 0 {
                for c in 0..n {
                    out[r * n + c] = 100.0 * self.counts[r * n + c] as f64 / sums[r] as f64;
                }
            }
        }
        out
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.classes != other.classes {
            return Err(Error::Protocol("cannot merge confusion matrices over different class lists".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Counts as CSV; first column is the true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        let n = self.classes.len();
        for r in 0..n {
            out.push_str(&self.classes[r]);
            for c in 0..n {
                out.push_str(&format!(",{}", self.counts[r * n + c]));
            }
            out.push('\n');
        }
        out
    }

    /// Row-normalized percentages as CSV, two decimal places.
    pub fn to_percent_csv(&self) -> String {
        let percentages = self.percentages();
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        let n = self.classes.len();
        for r in 0..n {
            out.push_str(&self.classes[r]);
            for c in 0..n {
                out.push_str(&format!(",{:.2}", percentages[r * n + c]));
            }
            out.push('\n');
        }
        out
    }
}

// --------------------------------------------------------------------------
// Evaluation driver
// --------------------------------------------------------------------------

/// Turns a sample into the feature vector the readout sees. `fold` lets an
/// implementation rebuild its reservoirs per fold (from the same base seed by
/// default, or reseeded per fold for variance studies).
pub trait StateEmbedder: Sync {
    fn embed(&self, fold: usize, sample: &SampleRecord) -> Result<Vec<f64>>;

    /// Folds with equal keys embed every sample identically (they share
    /// reservoir weights), which lets the evaluation driver reuse states
    /// across such folds instead of recomputing them. The default marks
    /// every fold distinct, i.e. no reuse.
    fn fold_key(&self, fold: usize) -> u64 {
        fold as u64
    }
}

/// Fits a classifier on labeled state vectors.
pub trait ReadoutTrainer: Sync {
    fn fit(
        &self,
        states: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
    ) -> Result<Box<dyn StatePredictor>>;
}

/// A fitted classifier over state vectors.
pub trait StatePredictor: Send + Sync {
    fn predict(&self, state: &[f64]) -> Result<usize>;
}

/// Per-protocol evaluation result. The timing fields are excluded from the
/// serialized form — wall-clock numbers vary run to run, and reports are
/// expected to be byte-identical across reruns; use [`EvalReport::timing_json`]
/// for the timing sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub fold_names: Vec<String>,
    pub fold_accuracies: Vec<f64>,
    /// Arithmetic mean of the fold accuracies.
    pub mean_accuracy: f64,
    /// Population standard deviation over the fold accuracies.
    pub std_accuracy: f64,
    /// Pooled over all folds.
    pub confusion: ConfusionMatrix,
    #[serde(skip)]
    pub train_seconds: Vec<f64>,
    #[serde(skip)]
    pub infer_ms_per_sample: f64,
}

impl EvalReport {
    /// The reproducible part of the report (everything but timings).
    pub fn stable_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// The run-dependent part: per-fold training seconds and per-sample
    /// inference milliseconds.
    pub fn timing_json(&self) -> String {
        #[derive(Serialize)]
        struct Timings<'a> {
            train_seconds: &'a [f64],
            infer_ms_per_sample: f64,
        }
        serde_json::to_string_pretty(&Timings {
            train_seconds: &self.train_seconds,
            infer_ms_per_sample: self.infer_ms_per_sample,
        })
        .expect("timing serialization cannot fail")
    }
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

fn fold_error(index: usize, name: &str, err: Error) -> Error {
    Error::Protocol(format!("fold {index} ({name}): {err}"))
}

/// Run every fold of `plan`: embed train samples, fit the readout, predict
/// the test samples, and pool the results. Reservoir construction happens
/// inside the embedder, which receives the fold index.
///
/// Train-side embeddings are cached across folds that share a
/// [`StateEmbedder::fold_key`] — with fixed weights, a k-fold plan would
/// otherwise recompute every state k−1 times. The cache holds at most one
/// state vector per sample. Test-side embeddings are always computed fresh
/// inside the inference timer, so the reported per-sample cost stays
/// honest; they join the cache only after the clock stops.
pub fn run_eval(
    records: &[SampleRecord],
    classes: &[String],
    plan: &SplitPlan,
    embedder: &dyn StateEmbedder,
    trainer: &dyn ReadoutTrainer,
) -> Result<EvalReport> {
    let by_id: HashMap<&str, &SampleRecord> =
        records.iter().map(|r| (r.id.as_str(), r)).collect();
    let resolve = |id: &String| -> Result<&SampleRecord> {
        by_id.get(id.as_str()).copied().ok_or_else(|| {
            Error::Protocol(format!("plan references unknown sample id {id:?}"))
        })
    };

    let mut fold_names = Vec::with_capacity(plan.folds.len());
    let mut fold_accuracies = Vec::with_capacity(plan.folds.len());
    let mut train_seconds = Vec::with_capacity(plan.folds.len());
    let mut confusion = ConfusionMatrix::new(classes);
    let mut infer_total_ms = 0.0;
    let mut infer_samples = 0usize;
    let mut cache: HashMap<String, Vec<f64>> = HashMap::new();
    let mut cache_key: Option<u64> = None;

    for (f, fold) in plan.folds.iter().enumerate() {
        let wrap = |err: Error| fold_error(f, &fold.name, err);
        let train_records: Vec<&SampleRecord> =
            fold.train.iter().map(resolve).collect::<Result<_>>().map_err(wrap)?;
        let test_records: Vec<&SampleRecord> =
            fold.test.iter().map(resolve).collect::<Result<_>>().map_err(wrap)?;

        let key = embedder.fold_key(f);
        if cache_key != Some(key) {
            cache.clear();
            cache_key = Some(key);
        }
        let missing: Vec<&SampleRecord> =
            train_records.iter().filter(|r| !cache.contains_key(&r.id)).copied().collect();
        let computed: Vec<(String, Vec<f64>)> = missing
            .par_iter()
            .map(|r| embedder.embed(f, r).map(|s| (r.id.clone(), s)))
            .collect::<Result<_>>()
            .map_err(wrap)?;
        cache.extend(computed);
        let train_states: Vec<Vec<f64>> = train_records
            .iter()
            .map(|r| cache.get(&r.id).expect("state cached above").clone())
            .collect();
        let train_labels: Vec<usize> = train_records.iter().map(|r| r.label_index).collect();

        let fit_start = Instant::now();
        let model = trainer.fit(&train_states, &train_labels, classes.len()).map_err(wrap)?;
        train_seconds.push(fit_start.elapsed().as_secs_f64());

        let infer_start = Instant::now();
        let test_states: Vec<Vec<f64>> = test_records
            .par_iter()
            .map(|r| embedder.embed(f, r))
            .collect::<Result<_>>()
            .map_err(wrap)?;
        let predictions: Vec<usize> = test_states
            .iter()
            .map(|s| model.predict(s))
            .collect::<Result<_>>()
            .map_err(wrap)?;
        infer_total_ms += infer_start.elapsed().as_secs_f64() * 1e3;
        infer_samples += test_records.len();

        for (record, state) in test_records.iter().zip(&test_states) {
            cache.entry(record.id.clone()).or_insert_with(|| state.clone());
        }

        let mut correct = 0usize;
        for (record, &predicted) in test_records.iter().zip(&predictions) {
            confusion.record(record.label_index, predicted).map_err(wrap)?;
            if predicted == record.label_index {
                correct += 1;
            }
        }
        fold_names.push(fold.name.clone());
        fold_accuracies.push(if test_records.is_empty() {
            0.0
        } else {
            correct as f64 / test_records.len() as f64
        });
    }

    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    let std_accuracy = population_std(&fold_accuracies, mean_accuracy);
    Ok(EvalReport {
        protocol: plan.protocol,
        seed: plan.seed,
        fold_names,
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        confusion,
        train_seconds,
        infer_ms_per_sample: if infer_samples == 0 {
            0.0
        } else {
            infer_total_ms / infer_samples as f64
        },
    })
}

// --------------------------------------------------------------------------
// Timing
// --------------------------------------------------------------------------

/// Median wall-clock cost of one train/test cycle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimingSummary {
    pub train_seconds: f64,
    pub infer_ms_per_sample: f64,
}

/// Clone records with their payloads pulled into memory, so later fetches
/// cost no I/O (or generator work).
pub fn materialize(records: &[SampleRecord]) -> Result<Vec<SampleRecord>> {
    records
        .iter()
        .map(|r| {
            let payload = r.payload.get().map_err(|e| Error::Sample {
                id: r.id.clone(),
                detail: e.to_string(),
            })?;
            let mut clone = r.clone();
            clone.payload = PayloadHandle::in_memory(payload);
            Ok(clone)
        })
        .collect()
}

/// Time training on `train` and per-sample inference over `test`, reporting
/// medians over `repetitions` runs. Payloads are materialized before the
/// clock starts, so the numbers cover feature extraction, the reservoir run,
/// and the readout — not disk I/O. Runs single-threaded for reproducibility
/// unless `parallel` is set.
pub fn time_pipeline(
    train: &[SampleRecord],
    test: &[SampleRecord],
    classes: &[String],
    embedder: &dyn StateEmbedder,
    trainer: &dyn ReadoutTrainer,
    repetitions: usize,
    parallel: bool,
) -> Result<TimingSummary> {
    if repetitions < 3 {
        return Err(Error::Parameter {
            name: "repetitions".into(),
            detail: format!("need at least 3 for a stable median, got {repetitions}"),
        });
    }
    if test.is_empty() {
        return Err(Error::Protocol("timing needs a nonempty test set".into()));
    }
    let train = materialize(train)?;
    let test = materialize(test)?;
    let labels: Vec<usize> = train.iter().map(|r| r.label_index).collect();

    let run = || -> Result<(f64, f64)> {
        let start = Instant::now();
        let states: Vec<Vec<f64>> =
            train.iter().map(|r| embedder.embed(0, r)).collect::<Result<_>>()?;
        let model = trainer.fit(&states, &labels, classes.len())?;
        let train_s = start.elapsed().as_secs_f64();

        let start = Instant::now();
        for record in &test {
            let state = embedder.embed(0, record)?;
            model.predict(&state)?;
        }
        let infer_ms = start.elapsed().as_secs_f64() * 1e3 / test.len() as f64;
        Ok((train_s, infer_ms))
    };

    let mut train_times = Vec::with_capacity(repetitions);
    let mut infer_times = Vec::with_capacity(repetitions);
    let timed: Result<()> = {
        let mut body = || -> Result<()> {
            for _ in 0..repetitions {
                let (t, i) = run()?;
                train_times.push(t);
                infer_times.push(i);
            }
            Ok(())
        };
        if parallel {
            body()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .map_err(|e| Error::Training(format!("timing pool: {e}")))?;
            pool.install(body)
        }
    };
    timed?;

    let median = |values: &mut Vec<f64>| {
        values.sort_by(f64::total_cmp);
        values[values.len() / 2]
    };
    Ok(TimingSummary {
        train_seconds: median(&mut train_times),
        infer_ms_per_sample: median(&mut infer_times),
    })
}
