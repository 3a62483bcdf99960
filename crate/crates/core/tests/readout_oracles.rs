//! Readout solvers checked against independently-written oracles: the ridge
//! fit against an explicit-inverse route and long-run gradient descent, and
//! the SMO-trained SVM against projected-gradient ascent on the same dual.

mod common;

use common::{gauss_jordan_inverse, naive_matmul, rel_frobenius, ridge_gd_oracle};
use radar_esn::ridge::{fit_ridge, DesignMatrices, Expansion};
use radar_esn::rng::RngStream;
use radar_esn::svm::{svm_fit, SvmConfig};
use radar_esn::Matrix;

fn random_design(seed: u64, f: usize, s: usize, c: usize) -> DesignMatrices {
    let mut stream = RngStream::new(seed);
    let states: Vec<Vec<f64>> =
        (0..s).map(|_| (0..f).map(|_| stream.uniform(-1.0, 1.0)).collect()).collect();
    let labels: Vec<usize> = (0..s).map(|_| stream.index(c)).collect();
    DesignMatrices::assemble(&states, &labels, c, Expansion::Linear).unwrap()
}

/// `W = Y·Xᵀ·(X·Xᵀ + λI)⁻¹` with a Gauss–Jordan inverse and naive products —
/// the formula taken literally, sharing nothing with the production solver.
fn explicit_inverse_route(d: &DesignMatrices, lambda: f64) -> Vec<f64> {
    let f = d.x.rows();
    let s = d.x.cols();
    let c = d.y.rows();
    let xt = d.x.transpose();
    let gram = naive_matmul(f, s, f, d.x.data(), xt.data());
    let mut reg = gram;
    for i in 0..f {
        reg[i * f + i] += lambda;
    }
    let inv = gauss_jordan_inverse(f, &reg).expect("regularized Gram must be invertible");
    let yxt = naive_matmul(c, s, f, d.y.data(), xt.data());
    naive_matmul(c, f, f, &yxt, &inv)
}

#[test]
fn ridge_matches_the_explicit_inverse_route() {
    for (seed, f, s, c) in [(1u64, 12, 40, 3), (2, 30, 100, 5), (3, 25, 60, 2)] {
        let d = random_design(seed, f, s, c);
        let fit = fit_ridge(&d, 0.1).unwrap();
        let reference = explicit_inverse_route(&d, 0.1);
        let rel = rel_frobenius(fit.w_out.data(), &reference);
        assert!(rel <= 1e-8, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn ridge_matches_long_run_gradient_descent() {
    let d = random_design(4, 30, 100, 4);
    let fit = fit_ridge(&d, 0.1).unwrap();
    let oracle = ridge_gd_oracle(30, 100, 4, d.x.data(), d.y.data(), 0.1, 100_000);
    let rel = rel_frobenius(fit.w_out.data(), &oracle);
    assert!(rel <= 1e-4, "relative error {rel:e}");
}

#[test]
fn ridge_expansion_and_solver_compose() {
    // The expanded design must solve exactly like a plain design of the
    // lifted dimension: run both routes on the same expanded matrix.
    let mut stream = RngStream::new(5);
    let states: Vec<Vec<f64>> =
        (0..50).map(|_| (0..8).map(|_| stream.uniform(-1.0, 1.0)).collect()).collect();
    let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
    let d = DesignMatrices::assemble(&states, &labels, 3, Expansion::TanhExpanded).unwrap();
    assert_eq!(d.x.rows(), 17);
    let fit = fit_ridge(&d, 0.1).unwrap();
    let reference = explicit_inverse_route(&d, 0.1);
    assert!(rel_frobenius(fit.w_out.data(), &reference) <= 1e-8);
}

/// Two overlapping Gaussian blobs; the overlap forces both free and bound
/// support vectors, which is the regime worth checking.
fn blob_problem(seed: u64, per_class: usize, separation: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut stream = RngStream::new(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for cls in 0..2usize {
        let cx = if cls == 0 { -separation / 2.0 } else { separation / 2.0 };
        for _ in 0..per_class {
            features.push(vec![cx + stream.gaussian(), stream.gaussian()]);
            labels.push(cls);
        }
    }
    (features, labels)
}

#[test]
fn smo_agrees_with_projected_gradient_on_blobs() {
    let cfg = SvmConfig::default();
    for seed in [11u64, 12, 13] {
        let (features, labels) = blob_problem(seed, 30, 2.5);
        let model = svm_fit(&features, &labels, 2, &cfg).unwrap();
        let pair = &model.pairs[0];
        let gamma = model.gamma;

        let n = features.len();
        let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
        let mut kernel = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let d2: f64 = features[i]
                    .iter()
                    .zip(&features[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                kernel[i * n + j] = (-gamma * d2).exp();
            }
        }
        let alphas = common::svm_dual_pg_oracle(&kernel, &y, cfg.c, 100_000);
        let bias = common::svm_bias_from_alphas(&kernel, &y, cfg.c, &alphas);

        // Oracle feasibility.
        let balance: f64 = alphas.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(balance.abs() <= 1e-8, "oracle infeasible: {balance:e}");

        let mut agree = 0usize;
        for (t, point) in features.iter().enumerate() {
            let f_smo = pair.decision(gamma, point);
            let mut f_pg = bias;
            for j in 0..n {
                f_pg += alphas[j] * y[j] * kernel[t * n + j];
            }
            if f_smo.signum() == f_pg.signum() || (f_smo - f_pg).abs() <= 1e-2 {
                agree += 1;
            }
        }
        let rate = agree as f64 / n as f64;
        assert!(rate >= 0.95, "seed {seed}: sign agreement only {rate}");
    }
}

#[test]
fn smo_dual_is_feasible_on_blob_problems() {
    let cfg = SvmConfig::default();
    for seed in [21u64, 22] {
        let (features, labels) = blob_problem(seed, 25, 2.0);
        let model = svm_fit(&features, &labels, 2, &cfg).unwrap();
        let pair = &model.pairs[0];
        for coef in &pair.coefficients {
            assert!(coef.abs() <= cfg.c + 1e-9);
        }
        let balance: f64 = pair.coefficients.iter().sum();
        assert!(balance.abs() <= 1e-8, "Σ αᵢyᵢ = {balance:e}");
    }
}

#[test]
fn design_matrix_shapes_flow_through_matrix_type() {
    // Guard the F×S / C×S orientation conventions the oracles assume.
    let d = random_design(6, 7, 20, 3);
    assert_eq!((d.x.rows(), d.x.cols()), (7, 20));
    assert_eq!((d.y.rows(), d.y.cols()), (3, 20));
    let _: &Matrix = &d.x;
}
