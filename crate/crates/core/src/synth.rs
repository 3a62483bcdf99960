//! Synthetic gesture generator: desk-scale ground truth for the whole
//! pipeline.
//!
//! Every sample is a range–Doppler frame sequence containing one Gaussian
//! blob. The blob's range-bin center follows a class-specific trajectory
//! (approach, recede, oscillate, …) and its Doppler-bin center is the
//! discretized derivative of that trajectory — motion toward the sensor
//! shows up in the positive-Doppler half, motion away in the negative half,
//! and closer targets return more energy. Subjects differ by a random range
//! offset, sessions by an amplitude factor, and samples by duration and
//! i.i.d. half-normal noise.
//!
//! Generation is deterministic in the spec seed: every stochastic choice is
//! keyed by a string id through [`derive_seed`], so samples can be rendered
//! lazily, in any order, or in parallel, and a saved dataset reloads
//! bit-identically (values are quantized to 32 bits at the source, exactly
//! like the on-disk format).

use std::sync::Arc;

use crate::dataset::{Dataset, Payload, PayloadDims, PayloadHandle, PayloadKind, PayloadSource, SampleRecord};
use crate::error::{Error, Result};
use crate::feature::RdmSequence;
use crate::rng::{derive_seed, RngStream};

/// Range-bin and Doppler-bin standard deviations of the blob.
const SIGMA_RANGE: f64 = 1.6;
const SIGMA_DOPPLER: f64 = 1.8;
/// Doppler bins of displacement per range bin per step of closing speed.
const DOPPLER_GAIN: f64 = 6.0;
/// Peak return of the blob before range/antenna/session factors; high enough
/// that the target dominates the noise floor at the default noise level.
const BLOB_AMP: f64 = 4.0;

/// Names double as class labels; index = class index.
pub const TRAJECTORY_NAMES: [&str; 12] = [
    "approach",
    "recede",
    "oscillate",
    "oscillate-fast",
    "static-near",
    "static-far",
    "push-pull",
    "pull-push",
    "fast-sweep",
    "slow-drift",
    "accelerate",
    "decelerate",
];

/// Normalized range position for class `class` at progress `s` ∈ [0, 1].
/// 0 is nearest, 1 is farthest.
fn trajectory(class: usize, s: f64) -> f64 {
    use std::f64::consts::PI;
    match class {
        0 => 1.0 - s,
        1 => s,
        2 => 0.5 + 0.4 * (2.0 * PI * s).sin(),
        3 => 0.5 + 0.3 * (4.0 * PI * s).sin(),
        4 => 0.12,
        5 => 0.88,
        6 => (1.0 - 2.0 * s).abs(),
        7 => 1.0 - (1.0 - 2.0 * s).abs(),
        8 => (1.0 - 2.0 * s).max(0.0),
        9 => 0.35 + 0.3 * s,
        10 => 1.0 - s * s,
        11 => (1.0 - s) * (1.0 - s),
        _ => unreachable!("class indices are validated against the catalog"),
    }
}

/// Generation parameters. Counts say how big the corpus is; the dims default
/// to a four-antenna 32×32 sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub subjects: usize,
    pub sessions: usize,
    pub min_steps: usize,
    pub max_steps: usize,
    /// Scale of the i.i.d. half-normal noise added to every bin.
    pub noise: f64,
    pub seed: u64,
    pub antennas: usize,
    pub range_bins: usize,
    pub doppler_bins: usize,
}

impl SynthSpec {
    pub fn new(classes: usize, samples_per_class: usize) -> SynthSpec {
        SynthSpec {
            classes,
            samples_per_class,
            subjects: 4,
            sessions: 2,
            min_steps: 24,
            max_steps: 40,
            noise: 0.3,
            seed: 0,
            antennas: 4,
            range_bins: 32,
            doppler_bins: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::Parameter { name: "classes".into(), detail: "must be ≥ 1".into() });
        }
        if self.classes > TRAJECTORY_NAMES.len() {
            return Err(Error::Parameter {
                name: "classes".into(),
                detail: format!(
                    "the trajectory catalog has {} entries, {} classes requested",
                    TRAJECTORY_NAMES.len(),
                    self.classes
                ),
            });
        }
        for (name, v) in [
            ("samples_per_class", self.samples_per_class),
            ("subjects", self.subjects),
            ("sessions", self.sessions),
            ("antennas", self.antennas),
        ] {
            if v == 0 {
                return Err(Error::Parameter { name: name.into(), detail: "must be ≥ 1".into() });
            }
        }
        if self.min_steps < 4 {
            return Err(Error::Parameter {
                name: "min_steps".into(),
                detail: "trajectories need at least 4 steps".into(),
            });
        }
        if self.min_steps > self.max_steps {
            return Err(Error::Parameter {
                name: "max_steps".into(),
                detail: format!("range [{}, {}] is empty", self.min_steps, self.max_steps),
            });
        }
        if self.range_bins < 8 || self.doppler_bins < 8 {
            return Err(Error::Parameter {
                name: "range_bins/doppler_bins".into(),
                detail: "the blob needs at least 8 bins per axis".into(),
            });
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::Parameter {
                name: "noise".into(),
                detail: format!("must be finite and ≥ 0, got {}", self.noise),
            });
        }
        Ok(())
    }
}

/// Everything needed to render one sample, resolved at generation time so a
/// fetch is pure computation.
#[derive(Debug, Clone)]
struct SynthSource {
    class: usize,
    steps: usize,
    antennas: usize,
    range_bins: usize,
    doppler_bins: usize,
    subject_offset: f64,
    session_amp: f64,
    noise: f64,
    noise_seed: u64,
}

impl PayloadSource for SynthSource {
    fn fetch(&self) -> Result<Payload> {
        Ok(Payload::Rdm(render(self)))
    }
}

fn render(src: &SynthSource) -> RdmSequence {
    let (steps, a_n, r_n, d_n) = (src.steps, src.antennas, src.range_bins, src.doppler_bins);
    let r_hi = (r_n - 1) as f64;
    let d_center = (d_n - 1) as f64 / 2.0;
    let margin = 3.0;

    // Range center per step, then closing speed as a backward difference.
    let centers: Vec<f64> = (0..steps)
        .map(|t| {
            let s = t as f64 / (steps - 1) as f64;
            let tau = trajectory(src.class, s);
            (margin + tau * (r_hi - 2.0 * margin) + src.subject_offset).clamp(1.0, r_hi - 1.0)
        })
        .collect();
    let speed =
        |t: usize| if t == 0 { centers[1] - centers[0] } else { centers[t] - centers[t - 1] };

    let mut noise_stream = RngStream::new(src.noise_seed);
    let mut data = Vec::with_capacity(steps * a_n * r_n * d_n);
    for t in 0..steps {
        let rho = centers[t];
        // Toward the sensor (range decreasing) lands in the upper, positive
        // Doppler half.
        let delta =
            (d_center - DOPPLER_GAIN * speed(t)).clamp(2.0, (d_n - 1) as f64 - 2.0);
        // Closer targets return more energy.
        let range_gain = 1.25 - 0.5 * (rho / r_hi);
        for a in 0..a_n {
            let rho_a = rho + 0.15 * a as f64;
            let amp = BLOB_AMP * src.session_amp * range_gain / (1.0 + 0.04 * a as f64);
            for r in 0..r_n {
                let dr = (r as f64 - rho_a) / SIGMA_RANGE;
                let radial = (-0.5 * dr * dr).exp();
                for d in 0..d_n {
                    let dd = (d as f64 - delta) / SIGMA_DOPPLER;
                    let mut v = amp * radial * (-0.5 * dd * dd).exp();
                    if src.noise > 0.0 {
                        v += src.noise * noise_stream.gaussian().abs();
                    }
                    data.push((v as f32) as f64);
                }
            }
        }
    }
    RdmSequence::new(steps, a_n, r_n, d_n, data)
        .expect("rendered values are finite and nonnegative by construction")
}

/// Generate a fully-labeled dataset. Payloads are rendered on demand, so the
/// returned dataset is cheap regardless of corpus size.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let classes: Vec<String> =
        TRAJECTORY_NAMES[..spec.classes].iter().map(|n| n.to_string()).collect();
    let mut samples = Vec::with_capacity(spec.classes * spec.samples_per_class);
    for (class, name) in classes.iter().enumerate() {
        for rep in 0..spec.samples_per_class {
            let subject = rep % spec.subjects;
            let session = (rep / spec.subjects) % spec.sessions;
            let id = format!("{name}-u{subject:02}-e{session:02}-r{rep:03}");
            let sample_seed = derive_seed(spec.seed, &id);
            let mut duration_stream = RngStream::new(sample_seed);
            let steps =
                spec.min_steps + duration_stream.index(spec.max_steps - spec.min_steps + 1);
            let subject_offset =
                RngStream::new(derive_seed(spec.seed, &format!("subject-{subject}")))
                    .uniform(-2.0, 2.0);
            let session_amp = 1.0
                + RngStream::new(derive_seed(spec.seed, &format!("session-{subject}-{session}")))
                    .uniform(-0.15, 0.15);
            let source = SynthSource {
                class,
                steps,
                antennas: spec.antennas,
                range_bins: spec.range_bins,
                doppler_bins: spec.doppler_bins,
                subject_offset,
                session_amp,
                noise: spec.noise,
                noise_seed: derive_seed(sample_seed, "noise"),
            };
            samples.push(SampleRecord {
                id,
                label: name.clone(),
                label_index: class,
                subject: format!("subj-{subject:02}"),
                session: format!("sess-{session:02}"),
                payload: PayloadHandle::new(Arc::new(source)),
            });
        }
    }
    Ok(Dataset {
        name: format!("synthetic-{}x{}", spec.classes, spec.samples_per_class),
        payload_kind: PayloadKind::Rdm,
        dims: PayloadDims::rdm(
            spec.antennas as u32,
            spec.range_bins as u32,
            spec.doppler_bins as u32,
        ),
        classes,
        samples,
    })
}
