//! Command-line front end: dataset conversion and generation, training,
//! evaluation, prediction, timing benchmarks, hyper-parameter search, and
//! artifact inspection.
//!
//! Configuration precedence is CLI flag > config file > built-in default.
//! Every output file is written atomically (temp file + rename), so a failed
//! run never leaves a partial artifact behind. Exit codes: 0 success, 2 for
//! usage/input problems (bad flags, unreadable files, invalid config), 1 for
//! runtime failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use radar_esn::dataset::{read_payload, write_atomic, Dataset, Payload, PayloadKind};
use radar_esn::error::{Error, Result};
use radar_esn::eval::{plan_split, time_pipeline, EvalReport, Protocol};
use radar_esn::feature::Normalization;
use radar_esn::hpo::{grid_search, random_search, GridSpec, SearchSpace, TuneOutcome};
use radar_esn::pipeline::{
    evaluate, readout_input_dim, train, Architecture, PipelineConfig, PipelineEmbedder,
    PipelineTrainer, ReadoutKind, TrainedModel,
};
use radar_esn::synth::{synth_generate, SynthSpec};

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

/// Echo-state-network toolkit for radar gesture classification.
#[derive(Parser)]
#[command(name = "radar-esn", version, about, propagate_version = true)]
struct Cli {
    /// Worker threads (0 = all cores; 1 guarantees bit-reproducible runs).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import an externally distributed gesture corpus into the portable
    /// dataset format.
    Convert(ConvertArgs),
    /// Generate a labeled synthetic gesture dataset.
    Synth(SynthArgs),
    /// Train a model on a dataset and save it.
    Train(TrainArgs),
    /// Evaluate a configuration under its protocol and write report files.
    Evaluate(EvaluateArgs),
    /// Predict labels for payload files with a trained model.
    Predict(PredictArgs),
    /// Time training and per-sample inference across model variants.
    Bench(BenchArgs),
    /// Search reservoir and readout hyper-parameters.
    Tune(TuneArgs),
    /// Describe a model file, dataset directory, or payload file.
    Inspect(InspectArgs),
}

/// Config file plus the pipeline fields that can be overridden per flag.
/// Structured knobs without flags (SVM, forest, search axes) are set in the
/// config file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON configuration file; every field is optional and the flags below
    /// override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Reservoir layout: `multi` (one reservoir per feature map) or
    /// `single` (one reservoir over stacked maps).
    #[arg(long)]
    architecture: Option<Architecture>,

    /// Classifier on the unified state: rr_l, rr_n, svm, or rf.
    #[arg(long)]
    readout: Option<ReadoutKind>,

    /// Nodes per reservoir.
    #[arg(long)]
    nodes: Option<usize>,

    /// Target spectral radius of the recurrent weights.
    #[arg(long)]
    spectral_radius: Option<f64>,

    /// Input weight scale.
    #[arg(long)]
    input_scaling: Option<f64>,

    /// Fraction of nonzero recurrent weights.
    #[arg(long)]
    density: Option<f64>,

    /// Leak coefficient of the state update.
    #[arg(long)]
    leaking_rate: Option<f64>,

    /// Ridge regularization strength.
    #[arg(long)]
    lambda: Option<f64>,

    /// Feature-map normalization: per-sample-max or none.
    #[arg(long)]
    normalization: Option<Normalization>,

    /// Evaluation protocol: holdout-50-50, kfold-10,
    /// leave-one-subject-out, or leave-one-session-out.
    #[arg(long)]
    protocol: Option<Protocol>,

    /// Base seed for reservoir weights and splits.
    #[arg(long)]
    seed: Option<u64>,

    /// Rebuild reservoirs from a fold-specific seed during evaluation
    /// (for variance studies; pass `true` or `false`).
    #[arg(long, value_name = "BOOL")]
    reseed_per_fold: Option<bool>,

    /// Write the merged effective configuration (JSON) to this path.
    #[arg(long, value_name = "FILE")]
    dump_config: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Corpus layout: `soli` or `dopnet`.
    #[arg(long)]
    kind: String,

    /// Directory holding the original distribution.
    #[arg(long, value_name = "DIR")]
    source: PathBuf,

    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Dataset name in the manifest (default: derived from the shape).
    #[arg(long)]
    name: Option<String>,

    /// Gesture classes to generate (each gets its own motion trajectory).
    #[arg(long, default_value_t = 3)]
    classes: usize,

    /// Samples per class.
    #[arg(long, default_value_t = 8)]
    per_class: usize,

    /// Distinct subjects.
    #[arg(long, default_value_t = 4)]
    subjects: usize,

    /// Recording sessions per subject.
    #[arg(long, default_value_t = 2)]
    sessions: usize,

    /// Shortest sequence length (time steps).
    #[arg(long, default_value_t = 24)]
    min_steps: usize,

    /// Longest sequence length (time steps).
    #[arg(long, default_value_t = 40)]
    max_steps: usize,

    /// Additive noise level.
    #[arg(long, default_value_t = 0.3)]
    noise: f64,

    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Receive antennas per frame.
    #[arg(long, default_value_t = 4)]
    antennas: usize,

    /// Range bins per frame.
    #[arg(long, default_value_t = 32)]
    range_bins: usize,

    /// Doppler bins per frame.
    #[arg(long, default_value_t = 32)]
    doppler_bins: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Dataset directory or manifest path.
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,

    /// Where to write the trained model.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Dataset directory or manifest path.
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,

    /// Directory for report.json, confusion CSVs, and the timing sidecar.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Payload files; one prediction line per file, in argument order.
    #[arg(required = true, value_name = "PAYLOAD")]
    samples: Vec<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Dataset directory or manifest path.
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,

    /// Architectures to time (comma-separated).
    #[arg(long, value_delimiter = ',', default_values_t = [Architecture::Multi, Architecture::Single])]
    architectures: Vec<Architecture>,

    /// Readouts to time (comma-separated).
    #[arg(long, value_delimiter = ',', default_values_t = ReadoutKind::ALL)]
    readouts: Vec<ReadoutKind>,

    /// Node count for single-reservoir rows (default: same as `--nodes`).
    /// Lets each architecture run at its published size in one table.
    #[arg(long, value_name = "N")]
    single_nodes: Option<usize>,

    /// Timing repetitions; the median is reported.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,

    /// Let the timed region use the global thread pool instead of the
    /// reproducible single-threaded default.
    #[arg(long)]
    parallel_timing: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Dataset directory or manifest path.
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,

    /// Directory for trials.json and the timing sidecar.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Random-search trial count.
    #[arg(long)]
    budget: Option<usize>,

    /// Exhaustive search over the config file's `grid` axes instead of
    /// random sampling from `search`.
    #[arg(long)]
    grid: bool,
}

#[derive(Args)]
struct InspectArgs {
    /// Model file, dataset directory (or manifest), or payload file.
    path: PathBuf,
}

// ---------------------------------------------------------------------------
// Config file schema and merging
// ---------------------------------------------------------------------------

/// Everything a run can be configured with: the pipeline settings plus
/// paths and command-level knobs. This is the schema of `--config` files
/// and of `--dump-config` output, so a dump re-parses as a config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    pipeline: PipelineConfig,
    /// Dataset directory or manifest path.
    dataset: Option<PathBuf>,
    /// Model file (output for `train`).
    model: Option<PathBuf>,
    /// Report/trial-log directory (for `evaluate` and `tune`).
    out: Option<PathBuf>,
    /// Random-search space for `tune`.
    search: SearchSpace,
    /// Grid axes for `tune --grid`.
    grid: GridSpec,
    /// Random-search trial count for `tune`.
    budget: usize,
    /// Timing repetitions for `bench`.
    repetitions: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            pipeline: PipelineConfig::default(),
            dataset: None,
            model: None,
            out: None,
            search: SearchSpace::default(),
            grid: GridSpec::default(),
            budget: 30,
            repetitions: 5,
        }
    }
}

impl ConfigArgs {
    /// File (or defaults) with the flag overrides applied on top.
    fn resolve(&self) -> Result<RunConfig> {
        let mut rc = match &self.config {
            None => RunConfig::default(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                serde_json::from_str(&text).map_err(|e| {
                    // serde_json reports line and column in `e`.
                    Error::Config(format!("{}: {e}", path.display()))
                })?
            }
        };
        let p = &mut rc.pipeline;
        if let Some(v) = self.architecture {
            p.architecture = v;
        }
        if let Some(v) = self.readout {
            p.readout = v;
        }
        if let Some(v) = self.nodes {
            p.reservoir.nodes = v;
        }
        if let Some(v) = self.spectral_radius {
            p.reservoir.spectral_radius_target = v;
        }
        if let Some(v) = self.input_scaling {
            p.reservoir.input_scaling = v;
        }
        if let Some(v) = self.density {
            p.reservoir.density = v;
        }
        if let Some(v) = self.leaking_rate {
            p.reservoir.leaking_rate = v;
        }
        if let Some(v) = self.lambda {
            p.lambda = v;
        }
        if let Some(v) = self.normalization {
            p.normalization = v;
        }
        if let Some(v) = self.protocol {
            p.protocol = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.reseed_per_fold {
            p.reseed_per_fold = v;
        }
        Ok(rc)
    }

    /// Write the merged effective config when `--dump-config` was given.
    /// Call after every override (including path resolution) is applied.
    fn maybe_dump(&self, rc: &RunConfig) -> Result<()> {
        if let Some(path) = &self.dump_config {
            let mut text = serde_json::to_string_pretty(rc)
                .map_err(|e| Error::Config(format!("serializing effective config: {e}")))?;
            text.push('\n');
            write_atomic(path, text.as_bytes())?;
        }
        Ok(())
    }
}

fn require(value: Option<PathBuf>, what: &str, flag: &str) -> Result<PathBuf> {
    value.ok_or_else(|| {
        Error::Config(format!("no {what} given; pass {flag} or set it in the config file"))
    })
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Convert(args) => cmd_convert(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Inspect(args) => cmd_inspect(args),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

#[cfg(feature = "hdf5-convert")]
fn cmd_convert(args: ConvertArgs) -> Result<()> {
    use radar_esn::convert::{convert_external, ExternalKind};

    let kind: ExternalKind = args.kind.parse()?;
    log::info!("converting {kind} corpus at {}", args.source.display());
    let report = convert_external(kind, &args.source, &args.out)?;
    println!("dataset: {}", report.dataset_dir.display());
    println!("samples: {}", report.samples);
    println!("classes ({}): {}", report.classes.len(), report.classes.join(", "));
    println!("subjects ({}): {}", report.subjects.len(), report.subjects.join(", "));
    for warning in &report.warnings {
        println!("warning: {warning}");
    }
    Ok(())
}

#[cfg(not(feature = "hdf5-convert"))]
fn cmd_convert(_args: ConvertArgs) -> Result<()> {
    Err(Error::Config(
        "this binary was built without HDF5 support; rebuild with `--features hdf5-convert`"
            .into(),
    ))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        classes: args.classes,
        samples_per_class: args.per_class,
        subjects: args.subjects,
        sessions: args.sessions,
        min_steps: args.min_steps,
        max_steps: args.max_steps,
        noise: args.noise,
        seed: args.seed,
        antennas: args.antennas,
        range_bins: args.range_bins,
        doppler_bins: args.doppler_bins,
    };
    let mut dataset = synth_generate(&spec)?;
    if let Some(name) = args.name {
        dataset.name = name;
    }
    dataset.save(&args.out)?;
    println!(
        "wrote {} samples ({} classes, {} subjects) to {}",
        dataset.samples.len(),
        dataset.classes.len(),
        dataset.subjects().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut rc = args.config.resolve()?;
    rc.dataset = args.dataset.or(rc.dataset);
    rc.model = args.model.or(rc.model);
    let dataset_path = require(rc.dataset.clone(), "dataset path", "--dataset")?;
    let model_path = require(rc.model.clone(), "model path", "--model")?;
    args.config.maybe_dump(&rc)?;

    log::info!("loading dataset from {}", dataset_path.display());
    let dataset = Dataset::load(&dataset_path)?;
    log::info!("training on {} samples", dataset.samples.len());
    let start = Instant::now();
    let model = train(&rc.pipeline, &dataset)?;
    let elapsed = start.elapsed().as_secs_f64();
    model.save(&model_path)?;

    println!("train accuracy: {:.4}", model.train_accuracy());
    println!("train time: {elapsed:.3} s");
    println!("model: {}", model_path.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut rc = args.config.resolve()?;
    rc.dataset = args.dataset.or(rc.dataset);
    rc.out = args.out.or(rc.out);
    let dataset_path = require(rc.dataset.clone(), "dataset path", "--dataset")?;
    let out_dir = require(rc.out.clone(), "output directory", "--out")?;
    args.config.maybe_dump(&rc)?;

    let dataset = Dataset::load(&dataset_path)?;
    log::info!(
        "evaluating {} under {} on {} samples",
        rc.pipeline.readout,
        rc.pipeline.protocol,
        dataset.samples.len()
    );
    let report = evaluate(&rc.pipeline, &dataset)?;
    write_reports(&out_dir, &report)?;

    println!("protocol: {}", report.protocol);
    println!("folds: {}", report.fold_names.len());
    println!("accuracy: {:.4} ± {:.4}", report.mean_accuracy, report.std_accuracy);
    println!("reports: {}", out_dir.display());
    Ok(())
}

/// report.json + confusion CSVs are byte-stable across reruns; wall-clock
/// numbers go to a separate sidecar.
fn write_reports(dir: &Path, report: &EvalReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    write_atomic(&dir.join("report.json"), report.stable_json().as_bytes())?;
    write_atomic(&dir.join("confusion.csv"), report.confusion.to_csv().as_bytes())?;
    write_atomic(
        &dir.join("confusion_percent.csv"),
        report.confusion.to_percent_csv().as_bytes(),
    )?;
    write_atomic(&dir.join("timings.json"), report.timing_json().as_bytes())?;
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model = TrainedModel::load(&args.model)?;
    let mut lines = String::new();
    for path in &args.samples {
        let payload = read_payload(path)?;
        let prediction = model.predict_payload(&payload).map_err(|e| match e {
            Error::Dataset(detail) => {
                Error::Format { path: path.display().to_string(), detail }
            }
            other => other,
        })?;
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let scores =
            prediction.scores.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(lines, "{id}\t{}\t{scores}", prediction.label).expect("string write");
    }
    print!("{lines}");
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut rc = args.config.resolve()?;
    rc.dataset = args.dataset.or(rc.dataset);
    rc.repetitions = args.repetitions;
    let dataset_path = require(rc.dataset.clone(), "dataset path", "--dataset")?;
    args.config.maybe_dump(&rc)?;

    let dataset = Dataset::load(&dataset_path)?;
    // One fixed stratified split, shared by every row of the table.
    let plan = plan_split(&dataset.samples, Protocol::Holdout5050, rc.pipeline.seed)?;
    let fold = &plan.folds[0];
    let pick = |ids: &[String]| -> Vec<_> {
        dataset.samples.iter().filter(|s| ids.contains(&s.id)).cloned().collect::<Vec<_>>()
    };
    let train_records = pick(&fold.train);
    let test_records = pick(&fold.test);

    println!(
        "{:<14} {:>6} {:>12} {:>18}",
        "model", "dim", "train [s]", "infer [ms/sample]"
    );
    for &architecture in &args.architectures {
        for &readout in &args.readouts {
            let mut config = PipelineConfig { architecture, readout, ..rc.pipeline.clone() };
            if architecture == Architecture::Single {
                if let Some(nodes) = args.single_nodes {
                    config.reservoir.nodes = nodes;
                }
            }
            let dim = readout_input_dim(&config, dataset.payload_kind, &dataset.dims);
            let embedder = PipelineEmbedder::new(&config, dataset.payload_kind, &dataset.dims)?;
            let trainer = PipelineTrainer::new(&config, dataset.classes.clone());
            let timing = time_pipeline(
                &train_records,
                &test_records,
                &dataset.classes,
                &embedder,
                &trainer,
                rc.repetitions,
                args.parallel_timing,
            )?;
            println!(
                "{:<14} {:>6} {:>12.4} {:>18.4}",
                format!("{architecture}-{readout}"),
                dim,
                timing.train_seconds,
                timing.infer_ms_per_sample
            );
        }
    }
    Ok(())
}

fn cmd_tune(args: TuneArgs) -> Result<()> {
    let mut rc = args.config.resolve()?;
    rc.dataset = args.dataset.or(rc.dataset);
    rc.out = args.out.or(rc.out);
    if let Some(budget) = args.budget {
        rc.budget = budget;
    }
    let dataset_path = require(rc.dataset.clone(), "dataset path", "--dataset")?;
    let out_dir = require(rc.out.clone(), "output directory", "--out")?;
    args.config.maybe_dump(&rc)?;

    let dataset = Dataset::load(&dataset_path)?;
    let outcome: TuneOutcome = if args.grid {
        log::info!("grid search over {} points", rc.grid.size());
        grid_search(&rc.grid, &dataset, &rc.pipeline)?
    } else {
        log::info!("random search, {} trials", rc.budget);
        random_search(&rc.search, rc.budget, &dataset, &rc.pipeline, rc.pipeline.seed)?
    };

    fs::create_dir_all(&out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    write_atomic(&out_dir.join("trials.json"), outcome.stable_json()?.as_bytes())?;
    write_atomic(&out_dir.join("trial_timings.json"), outcome.timing_json()?.as_bytes())?;

    let best = outcome.best();
    let r = &best.config.reservoir;
    println!("trials: {}", outcome.trials.len());
    println!("best trial: {} (objective {:.4})", best.index, best.objective);
    println!(
        "best settings: nodes={} spectral_radius={} input_scaling={} density={} \
         leaking_rate={} lambda={}",
        r.nodes,
        r.spectral_radius_target,
        r.input_scaling,
        r.density,
        r.leaking_rate,
        best.config.lambda
    );
    println!("log: {}", out_dir.join("trials.json").display());
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let path = &args.path;
    if path.is_dir() || path.file_name().is_some_and(|n| n == "manifest.json") {
        return inspect_dataset(path);
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let kind = (bytes.len() >= 16).then(|| u32::from_le_bytes(bytes[12..16].try_into().unwrap()));
    match kind {
        Some(radar_esn::pipeline::MODEL_KIND_CODE) => inspect_model(path),
        _ => inspect_payload(path),
    }
}

fn inspect_dataset(path: &Path) -> Result<()> {
    let dataset = Dataset::load(path)?;
    println!("dataset: {}", dataset.name);
    println!("payload: {}", describe_dims(dataset.payload_kind, &dataset.dims));
    println!("samples: {}", dataset.samples.len());
    let counts = dataset.class_counts();
    let classes = dataset
        .classes
        .iter()
        .zip(&counts)
        .map(|(c, n)| format!("{c} ({n})"))
        .collect::<Vec<_>>()
        .join(", ");
    println!("classes ({}): {classes}", dataset.classes.len());
    let subjects = dataset.subjects();
    println!("subjects ({}): {}", subjects.len(), subjects.join(", "));
    Ok(())
}

fn inspect_model(path: &Path) -> Result<()> {
    let model = TrainedModel::load(path)?;
    let config = model.config();
    println!("trained model: {}", path.display());
    println!("architecture: {}", config.architecture);
    println!("readout: {}", config.readout);
    println!(
        "reservoirs: {} × {} nodes (unified state {})",
        model.engine().reservoirs().len(),
        config.reservoir.nodes,
        model.engine().unified_dim()
    );
    println!("input: {}", describe_dims(model.payload_kind(), model.dims()));
    println!("feature maps: {}", model.map_layout().len());
    println!("classes ({}): {}", model.classes().len(), model.classes().join(", "));
    println!("seed: {}", config.seed);
    println!("train accuracy: {:.4}", model.train_accuracy());
    Ok(())
}

fn inspect_payload(path: &Path) -> Result<()> {
    let payload = read_payload(path)?;
    match &payload {
        Payload::Rdm(seq) => {
            println!("payload: range-Doppler frame sequence");
            println!("steps: {}", seq.steps());
            println!(
                "frame: {} antennas × {} range × {} Doppler bins",
                seq.antennas(),
                seq.range_bins(),
                seq.doppler_bins()
            );
        }
        Payload::Mdm(map) => {
            println!("payload: micro-Doppler map");
            println!("steps: {}", map.steps());
            println!("Doppler bins: {}", map.channels());
        }
    }
    Ok(())
}

fn describe_dims(kind: PayloadKind, dims: &radar_esn::dataset::PayloadDims) -> String {
    match kind {
        PayloadKind::Rdm => format!(
            "rdm ({} antennas × {} range × {} Doppler bins)",
            dims.antennas.unwrap_or(0),
            dims.range_bins.unwrap_or(0),
            dims.doppler_bins
        ),
        PayloadKind::Mdm => format!("mdm ({} Doppler bins)", dims.doppler_bins),
    }
}
