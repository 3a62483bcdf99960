//! Leaky-integrator echo state reservoir.
//!
//! A reservoir is a fixed random recurrent network: dense input weights
//! `w_in` drawn uniformly and scaled, and a sparse coupling matrix `w_res`
//! rescaled so its spectral radius hits a configured target. Only the readout
//! layers elsewhere in the crate are ever trained; the reservoir itself is
//! frozen at construction.
//!
//! State evolves one feature-map row per time step:
//!
//! ```text
//! x(t+1) = (1 − α)·x(t) + α·tanh(w_in·u(t+1) + w_res·x(t))
//! ```
//!
//! with leaking rate `α ∈ (0, 1]`. Classification uses the final state after
//! the whole sequence, starting from `x(0) = 0` with no washout — gesture
//! recordings are short, so discarding a transient would discard the signal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::linalg::CsrMatrix;
use crate::rng::RngStream;
use crate::Matrix;

/// Stopping tolerance handed to the spectral-radius estimator during build.
const RADIUS_TOL: f64 = 1e-10;
/// Iteration budget for the spectral-radius estimator during build.
const RADIUS_BUDGET: usize = 10_000;

/// Everything needed to rebuild a reservoir deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    /// Number of reservoir nodes N.
    pub nodes: usize,
    /// Input channels per time step.
    pub input_dim: usize,
    /// Target spectral radius for the rescaled coupling matrix.
    pub spectral_radius_target: f64,
    /// Half-width of the uniform input-weight distribution.
    pub input_scaling: f64,
    /// Probability that a coupling entry is nonzero.
    pub density: f64,
    /// Leaking rate α.
    pub leaking_rate: f64,
    /// Seed for all weight draws.
    pub seed: u64,
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, detail: String) -> Error {
            Error::Parameter { name, detail }
        }
        if self.nodes == 0 {
            return Err(bad("nodes", "must be ≥ 1".into()));
        }
        if self.input_dim == 0 {
            return Err(bad("input_dim", "must be ≥ 1".into()));
        }
        if !(self.spectral_radius_target > 0.0) || !self.spectral_radius_target.is_finite() {
            return Err(bad(
                "spectral_radius_target",
                format!("must be a finite positive real, got {}", self.spectral_radius_target),
            ));
        }
        if !(self.input_scaling > 0.0) || !self.input_scaling.is_finite() {
            return Err(bad(
                "input_scaling",
                format!("must be a finite positive real, got {}", self.input_scaling),
            ));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(bad("density", format!("must lie in (0, 1], got {}", self.density)));
        }
        if !(self.leaking_rate > 0.0 && self.leaking_rate <= 1.0) {
            return Err(bad("leaking_rate", format!("must lie in (0, 1], got {}", self.leaking_rate)));
        }
        Ok(())
    }
}

/// Reservoir state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    values: Vec<f64>,
}

impl ReservoirState {
    pub fn zero(n: usize) -> Self {
        ReservoirState { values: vec![0.0; n] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        ReservoirState { values }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean distance to another state.
    pub fn distance(&self, other: &ReservoirState) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A built, immutable reservoir. Share freely across threads; all methods
/// take `&self` and runs over distinct samples are independent.
#[derive(Debug, Clone)]
pub struct Reservoir {
    spec: ReservoirSpec,
    w_in: Matrix,
    w_res: Matrix,
    /// Sparse mirror of `w_res`, used for the recurrent product when the
    /// realized density makes it cheaper than the dense row sweep.
    w_res_sparse: Option<CsrMatrix<f64>>,
    achieved_rho: f64,
}

impl Reservoir {
    /// Draw weights for `spec` and rescale the coupling matrix to the target
    /// spectral radius. Deterministic in `spec.seed`.
    pub fn build(spec: ReservoirSpec) -> Result<Reservoir> {
        spec.validate()?;
        let mut stream = RngStream::new(spec.seed);
        let w_in = Matrix::random_uniform(
            spec.nodes,
            spec.input_dim,
            -spec.input_scaling,
            spec.input_scaling,
            &mut stream,
        );
        let mut w_res = Matrix::random_sparse(spec.nodes, spec.density, -1.0, 1.0, &mut stream)?;
        let raw = w_res.spectral_radius(RADIUS_TOL, RADIUS_BUDGET);
        if raw.value < 1e-12 {
            return Err(Error::Initialization(format!(
                "coupling matrix for seed {} ({} nodes at density {}) has spectral radius {:.3e}, \
                 too close to zero to rescale; retry with a different seed or a higher density",
                spec.seed, spec.nodes, spec.density, raw.value
            )));
        }
        if !raw.converged {
            log::warn!(
                "spectral-radius estimate for seed {} stopped at the {}－iteration budget without \
                 meeting tolerance; the rescaled radius may be off target",
                spec.seed,
                raw.iterations
            );
        }
        w_res.scale_in_place(spec.spectral_radius_target / raw.value);
        let achieved = w_res.spectral_radius(RADIUS_TOL, RADIUS_BUDGET);
        Reservoir::from_parts(spec, w_in, w_res, achieved.value)
    }

    /// Assemble a reservoir from already-known weights (model deserialization
    /// and hand-built test fixtures). Validates shapes against the spec but
    /// trusts the weights themselves.
    pub fn from_parts(spec: ReservoirSpec, w_in: Matrix, w_res: Matrix, achieved_rho: f64) -> Result<Reservoir> {
        spec.validate()?;
        if w_in.rows() != spec.nodes || w_in.cols() != spec.input_dim {
            return Err(Error::Shape {
                op: "reservoir assembly",
                detail: format!(
                    "input weights are {}×{}, spec needs {}×{}",
                    w_in.rows(),
                    w_in.cols(),
                    spec.nodes,
                    spec.input_dim
                ),
            });
        }
        if w_res.rows() != spec.nodes || w_res.cols() != spec.nodes {
            return Err(Error::Shape {
                op: "reservoir assembly",
                detail: format!(
                    "coupling matrix is {}×{}, spec needs {}×{}",
                    w_res.rows(),
                    w_res.cols(),
                    spec.nodes,
                    spec.nodes
                ),
            });
        }
        let nnz = w_res.data().iter().filter(|v| **v != 0.0).count();
        let w_res_sparse = if nnz * 2 < spec.nodes * spec.nodes {
            Some(CsrMatrix::from_dense(&w_res))
        } else {
            None
        };
        Ok(Reservoir { spec, w_in, w_res, w_res_sparse, achieved_rho })
    }

    #[inline]
    pub fn spec(&self) -> &ReservoirSpec {
        &self.spec
    }

    #[inline]
    pub fn w_in(&self) -> &Matrix {
        &self.w_in
    }

    #[inline]
    pub fn w_res(&self) -> &Matrix {
        &self.w_res
    }

    /// Spectral radius measured on the rescaled coupling matrix.
    #[inline]
    pub fn achieved_rho(&self) -> f64 {
        self.achieved_rho
    }

    /// One state update. Buffers are caller-provided so the sequential run
    /// loop allocates nothing per step.
    fn step_into(&self, x: &[f64], u: &[f64], drive: &mut [f64], recur: &mut [f64], out: &mut [f64]) {
        self.w_in.matvec_into(u, drive);
        match &self.w_res_sparse {
            Some(csr) => csr.matvec_into(x, recur),
            None => self.w_res.matvec_into(x, recur),
        }
        let alpha = self.spec.leaking_rate;
        let keep = 1.0 - alpha;
        for i in 0..out.len() {
            out[i] = keep * x[i] + alpha * (drive[i] + recur[i]).tanh();
        }
    }

    /// Single update `x' = (1−α)x + α·tanh(w_in·u + w_res·x)`.
    pub fn step(&self, x: &ReservoirState, u: &[f64]) -> Result<ReservoirState> {
        if x.len() != self.spec.nodes {
            return Err(Error::Shape {
                op: "reservoir step",
                detail: format!("state has {} components, reservoir has {} nodes", x.len(), self.spec.nodes),
            });
        }
        if u.len() != self.spec.input_dim {
            return Err(Error::Shape {
                op: "reservoir step",
                detail: format!("input has {} channels, reservoir expects {}", u.len(), self.spec.input_dim),
            });
        }
        let n = self.spec.nodes;
        let mut drive = vec![0.0; n];
        let mut recur = vec![0.0; n];
        let mut out = vec![0.0; n];
        self.step_into(x.values(), u, &mut drive, &mut recur, &mut out);
        Ok(ReservoirState::from_values(out))
    }

    /// Drive the reservoir with a whole feature map from the zero state and
    /// return the final state.
    pub fn run(&self, map: &FeatureMap) -> Result<ReservoirState> {
        self.run_from(&ReservoirState::zero(self.spec.nodes), map)
    }

    /// Like [`run`](Self::run) but starting from an arbitrary state. Normal
    /// classification always starts from zero; this entry exists for
    /// stability diagnostics that compare trajectories from perturbed starts.
    pub fn run_from(&self, initial: &ReservoirState, map: &FeatureMap) -> Result<ReservoirState> {
        if map.channels() != self.spec.input_dim {
            return Err(Error::Shape {
                op: "reservoir run",
                detail: format!(
                    "reservoir expects {} input channels, feature map has {}",
                    self.spec.input_dim,
                    map.channels()
                ),
            });
        }
        if initial.len() != self.spec.nodes {
            return Err(Error::Shape {
                op: "reservoir run",
                detail: format!(
                    "initial state has {} components, reservoir has {} nodes",
                    initial.len(),
                    self.spec.nodes
                ),
            });
        }
        let n = self.spec.nodes;
        let mut x = initial.values().to_vec();
        let mut next = vec![0.0; n];
        let mut drive = vec![0.0; n];
        let mut recur = vec![0.0; n];
        for t in 0..map.steps() {
            self.step_into(&x, map.row(t), &mut drive, &mut recur, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
        Ok(ReservoirState::from_values(x))
    }
}
