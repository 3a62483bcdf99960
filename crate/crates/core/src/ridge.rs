//! Linear readout layer: ridge regression from reservoir states to one-hot
//! class targets, with an optional nonlinear feature expansion.
//!
//! Training collects one (expanded) state per sample as the columns of
//! `X ∈ R^{F×S}` and the one-hot targets as `Y ∈ R^{C×S}`, then solves the
//! regularized least squares in closed form:
//!
//! ```text
//! W_out = Y·Xᵀ·(X·Xᵀ + λI)⁻¹
//! ```
//!
//! implemented as an SPD solve of `(X·Xᵀ + λI)·Zᵀ = X·Yᵀ` — the same result
//! as the explicit inverse with better conditioning. Prediction scores a
//! state with `W_out` and takes the argmax, breaking exact ties toward the
//! lowest class index; that tie-break is part of the contract and tests and
//! serialized models rely on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Matrix;

/// Feature expansion applied to a state vector before the linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// Use the state as-is.
    #[default]
    Linear,
    /// `[1, rᵀ, tanh(r)ᵀ]`: a bias, the state, and a squashed copy. Lifts
    /// dimension from `d` to `1 + 2d` and gives the linear layer a bounded
    /// nonlinear view of each component.
    TanhExpanded,
}

/// Dimension after expanding a `state_dim`-length vector.
pub fn expanded_dim(state_dim: usize, mode: Expansion) -> usize {
    match mode {
        Expansion::Linear => state_dim,
        Expansion::TanhExpanded => 1 + 2 * state_dim,
    }
}

/// Apply an expansion to one state vector.
pub fn expand(r: &[f64], mode: Expansion) -> Vec<f64> {
    match mode {
        Expansion::Linear => r.to_vec(),
        Expansion::TanhExpanded => {
            let mut out = Vec::with_capacity(1 + 2 * r.len());
            out.push(1.0);
            out.extend_from_slice(r);
            out.extend(r.iter().map(|v| v.tanh()));
            out
        }
    }
}

/// Index of the largest score, lowest index on exact ties.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in scores.iter().enumerate().skip(1) {
        if *v > scores[best] {
            best = i;
        }
    }
    best
}

/// Per-sample states and targets arranged for the closed-form solve:
/// states (after expansion) as columns of `x`, one-hot targets as columns
/// of `y`.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    pub x: Matrix,
    pub y: Matrix,
    pub expansion: Expansion,
}

impl DesignMatrices {
    /// Expand and column-pack `states` with their `labels`.
    pub fn assemble(
        states: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        expansion: Expansion,
    ) -> Result<DesignMatrices> {
        if states.is_empty() {
            return Err(Error::Training("cannot assemble design matrices from zero samples".into()));
        }
        if states.len() != labels.len() {
            return Err(Error::Training(format!(
                "{} states but {} labels",
                states.len(),
                labels.len()
            )));
        }
        if n_classes == 0 {
            return Err(Error::Training("need at least one class".into()));
        }
        let dim = states[0].len();
        if dim == 0 {
            return Err(Error::Training("state vectors are empty".into()));
        }
        let s = states.len();
        if s < n_classes {
            log::warn!("fitting {n_classes} classes from only {s} samples; expect a degenerate readout");
        }
        let f = expanded_dim(dim, expansion);
        let mut x = Matrix::try_zeros(f, s)?;
        let mut y = Matrix::try_zeros(n_classes, s)?;
        for (col, (state, &label)) in states.iter().zip(labels).enumerate() {
            if state.len() != dim {
                return Err(Error::Training(format!(
                    "state {col} has dimension {}, expected {dim}",
                    state.len()
                )));
            }
            if label >= n_classes {
                return Err(Error::Training(format!(
                    "sample {col} carries label {label}, but only {n_classes} classes are declared"
                )));
            }
            for (row, v) in expand(state, expansion).into_iter().enumerate() {
                x.set(row, col, v);
            }
            y.set(label, col, 1.0);
        }
        Ok(DesignMatrices { x, y, expansion })
    }

    /// Samples per class, for diagnostics.
    pub fn class_counts(&self) -> Vec<usize> {
        (0..self.y.rows())
            .map(|c| self.y.row(c).iter().filter(|v| **v == 1.0).count())
            .collect()
    }
}

/// A trained linear readout.
#[derive(Debug, Clone)]
pub struct RidgeReadout {
    /// Output weights, classes × features.
    pub w_out: Matrix,
    pub lambda: f64,
    pub expansion: Expansion,
    /// Class names in label order; defaults to the numeric labels.
    pub class_names: Vec<String>,
    /// Training residual ‖Y − W·X‖_F at the solution.
    pub train_residual: f64,
}

/// Closed-form ridge fit of `d` at regularization `lambda`.
pub fn fit_ridge(d: &DesignMatrices, lambda: f64) -> Result<RidgeReadout> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter {
            name: "lambda",
            detail: format!("ridge regularization must be a finite positive real, got {lambda}"),
        });
    }
    let mut a = d.x.gram()?; // X·Xᵀ, F×F
    a.add_diagonal(lambda);
    let b = d.x.matmul(&d.y.transpose())?; // X·Yᵀ, F×C
    let z = a.solve_spd(&b)?; // (X·Xᵀ+λI)⁻¹·X·Yᵀ
    let w_out = z.transpose(); // C×F
    let mut resid = w_out.matmul(&d.x)?;
    for (r, y) in resid.data_mut().iter_mut().zip(d.y.data()) {
        *r -= y;
    }
    let train_residual = resid.frobenius_norm();
    log::debug!(
        "ridge fit: {} classes × {} features from {} samples, residual {train_residual:.6}",
        w_out.rows(),
        w_out.cols(),
        d.x.cols()
    );
    Ok(RidgeReadout {
        class_names: (0..w_out.rows()).map(|c| c.to_string()).collect(),
        w_out,
        lambda,
        expansion: d.expansion,
        train_residual,
    })
}

impl RidgeReadout {
    pub fn n_classes(&self) -> usize {
        self.w_out.rows()
    }

    /// Raw class scores for a (pre-expansion) state vector.
    pub fn scores(&self, r: &[f64]) -> Result<Vec<f64>> {
        let psi = expand(r, self.expansion);
        if psi.len() != self.w_out.cols() {
            return Err(Error::Shape {
                op: "readout scoring",
                detail: format!(
                    "expanded state has {} features, readout was trained on {}",
                    psi.len(),
                    self.w_out.cols()
                ),
            });
        }
        self.w_out.matvec(&psi)
    }

    /// Predicted label (argmax of scores, lowest index on ties) and scores.
    pub fn predict(&self, r: &[f64]) -> Result<(usize, Vec<f64>)> {
        let scores = self.scores(r)?;
        Ok((argmax_lowest(&scores), scores))
    }
}
