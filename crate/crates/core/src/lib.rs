//! Echo state network toolkit for radar gesture recognition.
//!
//! The crate covers the full pipeline: range–Doppler payload ingestion,
//! feature-map extraction (range–time, Doppler–time, micro-Doppler),
//! leaky-integrator reservoirs and per-map reservoir banks, ridge / SVM /
//! random-forest readouts, evaluation protocols with confusion and timing
//! reports, hyper-parameter search, and a CLI that ties it together.
//!
//! The numeric core ([`linalg`]) is generic over the scalar type; the
//! pipeline itself runs in `f64` via the [`Matrix`] alias.

pub mod bank;
#[cfg(feature = "hdf5-convert")]
pub mod convert;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod feature;
pub mod forest;
pub mod hpo;
pub mod linalg;
pub mod pipeline;
pub mod reservoir;
pub mod ridge;
pub mod rng;
pub mod scalar;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense `f64` matrix — the concrete scalar type used by the whole pipeline.
pub type Matrix = linalg::DenseMatrix<f64>;
/// Single-precision variant, available for memory-bound experiments.
pub type Matrix32 = linalg::DenseMatrix<f32>;
