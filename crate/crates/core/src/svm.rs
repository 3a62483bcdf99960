//! Support vector machine readout: RBF kernel, one-vs-one multiclass, and a
//! from-scratch SMO solver.
//!
//! Each class pair gets its own binary soft-margin SVM, trained by
//! sequential minimal optimization on the dual problem
//!
//! ```text
//! min  ½·αᵀQα − Σαᵢ      Q_ij = yᵢyⱼ·K(xᵢ,xⱼ)
//! s.t. Σ αᵢyᵢ = 0,  0 ≤ αᵢ ≤ C
//! ```
//!
//! using maximal-violating-pair working-set selection: the most KKT-violating
//! coordinate from above and below are updated jointly, which preserves the
//! equality constraint by construction. Optimization stops when the violation
//! gap drops under `tolerance`, when updates stall for `max_passes`
//! consecutive selections, or at a hard iteration cap.
//!
//! Prediction lets every pairwise classifier vote; the majority label wins,
//! with ties broken first by the summed magnitude of the winning decision
//! values and then by the lowest class index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ridge::argmax_lowest;

/// Kernel coefficient choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// `1 / (F · var)` where `var` is the population variance of every
    /// training feature value — adapts the kernel width to the data scale.
    Scale,
    /// Explicit value.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Soft-margin penalty.
    pub c: f64,
    pub gamma_mode: GammaMode,
    /// KKT violation gap below which a binary problem counts as solved.
    pub tolerance: f64,
    /// Consecutive stalled pair selections tolerated before giving up.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 10.0, gamma_mode: GammaMode::Scale, tolerance: 1e-3, max_passes: 5 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Parameter {
                name: "c",
                detail: format!("penalty must be a finite positive real, got {}", self.c),
            });
        }
        if let GammaMode::Fixed(g) = self.gamma_mode {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Parameter {
                    name: "gamma",
                    detail: format!("fixed kernel coefficient must be a finite positive real, got {g}"),
                });
            }
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Parameter {
                name: "tolerance",
                detail: format!("must be a finite positive real, got {}", self.tolerance),
            });
        }
        if self.max_passes == 0 {
            return Err(Error::Parameter { name: "max_passes", detail: "must be ≥ 1".into() });
        }
        Ok(())
    }
}

/// One trained binary classifier of the one-vs-one ensemble. A positive
/// decision value votes for `class_pos`, negative for `class_neg`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinarySvm {
    pub class_pos: usize,
    pub class_neg: usize,
    /// Training points with nonzero dual weight.
    pub support_vectors: Vec<Vec<f64>>,
    /// `αᵢ·yᵢ` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    /// `Σ coefᵢ·K(svᵢ, r) + bias`.
    pub fn decision(&self, gamma: f64, r: &[f64]) -> f64 {
        let mut f = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.coefficients) {
            f += coef * rbf(gamma, sv, r);
        }
        f
    }
}

/// One-vs-one multiclass SVM ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub pairs: Vec<BinarySvm>,
    pub n_classes: usize,
    pub feature_dim: usize,
    /// Kernel coefficient actually used (resolved from the config's mode).
    pub gamma: f64,
    pub class_names: Vec<String>,
}

#[inline]
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Resolve the kernel coefficient for a training matrix.
fn resolve_gamma(features: &[Vec<f64>], dim: usize, mode: GammaMode) -> Result<f64> {
    match mode {
        GammaMode::Fixed(g) => Ok(g),
        GammaMode::Scale => {
            let count = (features.len() * dim) as f64;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for row in features {
                for v in row {
                    sum += v;
                    sumsq += v * v;
                }
            }
            let mean = sum / count;
            let var = (sumsq / count - mean * mean).max(0.0);
            if var <= f64::EPSILON {
                return Err(Error::Parameter {
                    name: "gamma",
                    detail: "training features have zero variance, so the scale heuristic is undefined; \
                             supply a fixed kernel coefficient instead"
                        .into(),
                });
            }
            Ok(1.0 / (dim as f64 * var))
        }
    }
}

/// Outcome of one binary SMO solve.
struct BinarySolution {
    alphas: Vec<f64>,
    bias: f64,
    iterations: usize,
    converged: bool,
}

/// SMO over a precomputed kernel submatrix. `kernel[i*n + j] = K(xᵢ,xⱼ)`,
/// `y ∈ {−1,+1}`.
fn solve_binary(kernel: &[f64], y: &[f64], cfg: &SvmConfig) -> BinarySolution {
    const TAU: f64 = 1e-12;
    let n = y.len();
    let c = cfg.c;
    let mut alpha = vec![0.0f64; n];
    // Gradient of the dual objective; α = 0 gives ∇ = −1.
    let mut grad = vec![-1.0f64; n];
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];

    let hard_cap = 200_000.max(500 * n);
    let mut stalls = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    loop {
        // Maximal violating pair: largest −y∇ among coordinates free to
        // increase, smallest among those free to decrease.
        let mut m_up = f64::NEG_INFINITY;
        let mut i_up = usize::MAX;
        let mut m_low = f64::INFINITY;
        let mut i_low = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let can_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let can_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if can_up && v > m_up {
                m_up = v;
                i_up = t;
            }
            if can_low && v < m_low {
                m_low = v;
                i_low = t;
            }
        }
        if i_up == usize::MAX || i_low == usize::MAX {
            // Every coordinate is pinned on the same side; nothing to move.
            converged = true;
            break;
        }
        gap = m_up - m_low;
        if gap <= cfg.tolerance {
            converged = true;
            break;
        }
        if iterations >= hard_cap {
            break;
        }
        iterations += 1;

        let (i, j) = (i_up, i_low);
        let old_ai = alpha[i];
        let old_aj = alpha[j];
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        if dai.abs() < 1e-12 && daj.abs() < 1e-12 {
            // No usable progress on the most violating pair; undo the
            // sub-rounding movement and count the stall.
            alpha[i] = old_ai;
            alpha[j] = old_aj;
            stalls += 1;
            if stalls >= cfg.max_passes {
                break;
            }
            continue;
        }
        stalls = 0;
        for t in 0..n {
            grad[t] += q(t, i) * dai + q(t, j) * daj;
        }
    }

    if !converged {
        log::warn!(
            "SMO stopped without reaching tolerance (gap {gap:.3e} after {iterations} updates); \
             the classifier is usable but slightly off-optimal"
        );
    }

    // At the optimum −y∇ equals the bias for every free support vector;
    // the midpoint of the two bound values is the standard robust choice.
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        let can_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let can_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if can_up && v > m_up {
            m_up = v;
        }
        if can_low && v < m_low {
            m_low = v;
        }
    }
    let bias = if m_up.is_finite() && m_low.is_finite() { (m_up + m_low) / 2.0 } else { 0.0 };

    BinarySolution { alphas: alpha, bias, iterations, converged }
}

/// Train a one-vs-one RBF SVM ensemble.
pub fn svm_fit(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    cfg: &SvmConfig,
) -> Result<SvmModel> {
    cfg.validate()?;
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::Training(format!(
            "{} feature rows and {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::Training("feature vectors are empty".into()));
    }
    for (i, row) in features.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Training(format!(
                "feature row {i} has dimension {}, expected {dim}",
                row.len()
            )));
        }
    }
    let mut present: Vec<usize> = Vec::new();
    for &l in labels {
        if l >= n_classes {
            return Err(Error::Training(format!(
                "label {l} out of range for {n_classes} classes"
            )));
        }
        if !present.contains(&l) {
            present.push(l);
        }
    }
    if present.len() < 2 {
        return Err(Error::Training(
            "training set contains a single class; a margin classifier needs at least two".into(),
        ));
    }
    present.sort_unstable();

    let gamma = resolve_gamma(features, dim, cfg.gamma_mode)?;

    // Per-fit kernel cache over the whole training set; pairwise problems
    // index into it.
    let n = features.len();
    let mut kernel = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = rbf(gamma, &features[i], &features[j]);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }

    let mut pairs = Vec::new();
    for (pi, &a) in present.iter().enumerate() {
        for &b in &present[pi + 1..] {
            let idx: Vec<usize> =
                (0..n).filter(|&t| labels[t] == a || labels[t] == b).collect();
            let m = idx.len();
            let y: Vec<f64> = idx.iter().map(|&t| if labels[t] == a { 1.0 } else { -1.0 }).collect();
            let mut sub = vec![0.0f64; m * m];
            for (r, &ti) in idx.iter().enumerate() {
                for (col, &tj) in idx.iter().enumerate() {
                    sub[r * m + col] = kernel[ti * n + tj];
                }
            }
            let sol = solve_binary(&sub, &y, cfg);
            log::debug!(
                "pair ({a},{b}): {m} samples, {} updates, converged={}",
                sol.iterations,
                sol.converged
            );
            let mut support_vectors = Vec::new();
            let mut coefficients = Vec::new();
            for (r, &t) in idx.iter().enumerate() {
                if sol.alphas[r] > 0.0 {
                    support_vectors.push(features[t].clone());
                    coefficients.push(sol.alphas[r] * y[r]);
                }
            }
            pairs.push(BinarySvm { class_pos: a, class_neg: b, support_vectors, coefficients, bias: sol.bias });
        }
    }

    Ok(SvmModel {
        pairs,
        n_classes,
        feature_dim: dim,
        gamma,
        class_names: (0..n_classes).map(|c| c.to_string()).collect(),
    })
}

impl SvmModel {
    /// Decision value of every pairwise classifier for `r`.
    pub fn decision_values(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.feature_dim {
            return Err(Error::Shape {
                op: "svm prediction",
                detail: format!("feature vector has {} components, model expects {}", r.len(), self.feature_dim),
            });
        }
        Ok(self.pairs.iter().map(|p| p.decision(self.gamma, r)).collect())
    }

    /// Majority vote over all pairs. Vote ties fall back to the summed
    /// magnitude of winning decision values, then the lowest class index.
    pub fn predict(&self, r: &[f64]) -> Result<usize> {
        let decisions = self.decision_values(r)?;
        let mut votes = vec![0usize; self.n_classes];
        let mut weight = vec![0.0f64; self.n_classes];
        for (pair, f) in self.pairs.iter().zip(&decisions) {
            let winner = if *f >= 0.0 { pair.class_pos } else { pair.class_neg };
            votes[winner] += 1;
            weight[winner] += f.abs();
        }
        let top = votes.iter().max().copied().unwrap_or(0);
        let tied: Vec<usize> = (0..self.n_classes).filter(|&c| votes[c] == top).collect();
        if tied.len() == 1 {
            return Ok(tied[0]);
        }
        let tied_weights: Vec<f64> = tied.iter().map(|&c| weight[c]).collect();
        Ok(tied[argmax_lowest(&tied_weights)])
    }
}
