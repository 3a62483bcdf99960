//! Oracle-backed checks for the dense linear-algebra kernels.
//!
//! The library's implementations (blocked/ikj matmul, Cholesky solve,
//! power-iteration spectral radius) are compared against independent naive
//! algorithms from `common`: triple-loop products, Gauss–Jordan inversion,
//! and a shifted-QR eigensolver.

mod common;

use common::*;
use radar_esn::linalg::DenseMatrix;
use radar_esn::rng::RngStream;
use radar_esn::{Error, Matrix};

fn random_matrix(rows: usize, cols: usize, stream: &mut RngStream) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| stream.uniform(-1.0, 1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

// --------------------------------------------------------------------------
// Oracle self-tests: the QR eigensolver must stand on its own evidence
// before it is trusted to judge the library.
// --------------------------------------------------------------------------

#[test]
fn oracle_selftest_diagonal_spectrum() {
    let n = 5;
    let diag = [3.0, -1.0, 0.5, 0.25, -2.5];
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = diag[i];
    }
    let moduli = eigen_moduli(n, &a);
    let mut expect: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
    expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for (got, want) in moduli.iter().zip(&expect) {
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }
}

#[test]
fn oracle_selftest_rotation_block() {
    // Scaled rotation: eigenvalues s·e^{±iθ}, modulus exactly s.
    let (s, theta) = (1.7, 0.9f64);
    let a = vec![
        s * theta.cos(),
        -s * theta.sin(),
        s * theta.sin(),
        s * theta.cos(),
    ];
    let moduli = eigen_moduli(2, &a);
    assert!((moduli[0] - s).abs() < 1e-12);
    assert!((moduli[1] - s).abs() < 1e-12);
}

#[test]
fn oracle_selftest_companion_matrix() {
    // Companion matrix of (z−1)(z−2)(z−3) = z³ − 6z² + 11z − 6.
    let a = vec![
        6.0, -11.0, 6.0, //
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0,
    ];
    let mut moduli = eigen_moduli(3, &a);
    moduli.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (got, want) in moduli.iter().zip(&[1.0, 2.0, 3.0]) {
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }
}

#[test]
fn oracle_selftest_similarity_invariance() {
    // A = P·D·P⁻¹ has exactly D's spectrum; the oracle must recover it.
    let n = 12;
    let mut stream = RngStream::new(91);
    let diag: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -0.5 }).collect();
    let p: Vec<f64> = (0..n * n).map(|_| stream.uniform(-1.0, 1.0)).collect();
    let p_inv = gauss_jordan_inverse(n, &p).expect("random P invertible");
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        d[i * n + i] = diag[i];
    }
    let pd = naive_matmul(n, n, n, &p, &d);
    let a = naive_matmul(n, n, n, &pd, &p_inv);
    let moduli = eigen_moduli(n, &a);
    let mut expect: Vec<f64> = diag.iter().map(|x| x.abs()).collect();
    expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for (got, want) in moduli.iter().zip(&expect) {
        assert!((got - want).abs() < 1e-7 * want.max(1.0), "got {got}, want {want}");
    }
}

#[test]
fn oracle_selftest_trace_is_sum_of_eigenvalues() {
    // Indirect global check on a random matrix: Σ|λᵢ| ≥ |Σλᵢ| = |trace|.
    let n = 20;
    let mut stream = RngStream::new(17);
    let a: Vec<f64> = (0..n * n).map(|_| stream.uniform(-1.0, 1.0)).collect();
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let moduli = eigen_moduli(n, &a);
    assert_eq!(moduli.len(), n);
    let sum_moduli: f64 = moduli.iter().sum();
    assert!(sum_moduli + 1e-9 >= trace.abs());
}

// --------------------------------------------------------------------------
// matmul against the triple-loop oracle.
// --------------------------------------------------------------------------

#[test]
fn matmul_matches_naive_oracle() {
    let mut stream = RngStream::new(1234);
    for &(m, k, n) in &[(1usize, 1usize, 1usize), (3, 4, 2), (17, 9, 23), (40, 40, 40), (5, 64, 7)] {
        let a = random_matrix(m, k, &mut stream);
        let b = random_matrix(k, n, &mut stream);
        let c = a.matmul(&b).unwrap();
        let want = naive_matmul(m, k, n, a.data(), b.data());
        assert!(rel_frobenius(c.data(), &want) < 1e-13, "shape ({m},{k},{n})");
    }
}

#[test]
fn matmul_known_product() {
    let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = Matrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
    let c = a.matmul(&b).unwrap();
    assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
}

#[test]
fn matmul_rejects_mismatched_shapes() {
    let a = Matrix::zeros(2, 3);
    let b = Matrix::zeros(4, 2);
    match a.matmul(&b) {
        Err(Error::Shape { .. }) => {}
        other => panic!("expected shape error, got {other:?}"),
    }
}

#[test]
fn matvec_matches_matmul_column() {
    let mut stream = RngStream::new(55);
    let a = random_matrix(13, 7, &mut stream);
    let x: Vec<f64> = (0..7).map(|_| stream.uniform(-1.0, 1.0)).collect();
    let y = a.matvec(&x).unwrap();
    let xm = Matrix::from_vec(7, 1, x).unwrap();
    let ym = a.matmul(&xm).unwrap();
    for i in 0..13 {
        assert!((y[i] - ym.data()[i]).abs() < 1e-14);
    }
}

// --------------------------------------------------------------------------
// solve_spd against Gauss–Jordan inversion.
// --------------------------------------------------------------------------

#[test]
fn solve_spd_small_residual_on_random_spd() {
    let mut stream = RngStream::new(2024);
    let n = 40;
    let q = random_matrix(n, n, &mut stream);
    let mut a = q.transpose().matmul(&q).unwrap();
    a.add_diagonal(0.1);
    let b = random_matrix(n, 3, &mut stream);
    let z = a.solve_spd(&b).unwrap();
    let az = a.matmul(&z).unwrap();
    assert!(rel_frobenius(az.data(), b.data()) <= 1e-10);
}

#[test]
fn solve_spd_matches_explicit_inverse() {
    let mut stream = RngStream::new(77);
    for trial in 0..5 {
        let n = 10 + trial * 7;
        let q = random_matrix(n, n, &mut stream);
        let mut a = q.transpose().matmul(&q).unwrap();
        a.add_diagonal(0.5);
        let b = random_matrix(n, 4, &mut stream);
        let z = a.solve_spd(&b).unwrap();
        let inv = gauss_jordan_inverse(n, a.data()).unwrap();
        let want = naive_matmul(n, n, 4, &inv, b.data());
        assert!(rel_frobenius(z.data(), &want) < 1e-8, "n = {n}");
    }
}

#[test]
fn solve_spd_names_offending_pivot() {
    // Indefinite matrix: diag(1, −1, 1). The first negative pivot is index 1.
    let a = Matrix::from_vec(3, 3, vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    let b = Matrix::zeros(3, 1);
    match a.solve_spd(&b) {
        Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
        other => panic!("expected NotPositiveDefinite, got {other:?}"),
    }
}

#[test]
fn solve_spd_identity_returns_rhs() {
    let a = Matrix::identity(6);
    let mut stream = RngStream::new(8);
    let b = random_matrix(6, 2, &mut stream);
    let z = a.solve_spd(&b).unwrap();
    assert!(rel_frobenius(z.data(), b.data()) < 1e-15);
}

// --------------------------------------------------------------------------
// spectral_radius against the QR eigensolver oracle.
// --------------------------------------------------------------------------

#[test]
fn spectral_radius_diagonal_is_exact() {
    let a = Matrix::from_vec(3, 3, vec![3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
    let est = a.spectral_radius(1e-10, 10_000);
    assert!(est.converged);
    assert!((est.value - 3.0).abs() < 1e-9, "value {}", est.value);
}

#[test]
fn spectral_radius_zero_matrix_is_zero() {
    let a = Matrix::zeros(8, 8);
    let est = a.spectral_radius(1e-10, 10_000);
    assert_eq!(est.value, 0.0);
}

#[test]
fn spectral_radius_nilpotent_is_zero() {
    // Strictly upper triangular ⇒ all eigenvalues zero, power iteration
    // collapses and must report 0 rather than looping.
    let mut a = Matrix::zeros(6, 6);
    for i in 0..5 {
        a.set(i, i + 1, 1.0 + i as f64);
    }
    let est = a.spectral_radius(1e-10, 10_000);
    assert!(est.value.abs() < 1e-12, "value {}", est.value);
}

#[test]
fn spectral_radius_complex_dominant_pair() {
    // Block-diagonal: rotation with modulus 2 plus a real eigenvalue 0.5.
    // The dominant eigenvalues are a complex conjugate pair, which defeats
    // plain Rayleigh-quotient iteration; the two-step recurrence must cope.
    let th = 0.7f64;
    let a = Matrix::from_vec(
        3,
        3,
        vec![
            2.0 * th.cos(),
            -2.0 * th.sin(),
            0.0,
            2.0 * th.sin(),
            2.0 * th.cos(),
            0.0,
            0.0,
            0.0,
            0.5,
        ],
    )
    .unwrap();
    let est = a.spectral_radius(1e-10, 10_000);
    assert!((est.value - 2.0).abs() < 1e-6, "value {}", est.value);
}

#[test]
fn spectral_radius_matches_qr_oracle_on_random_matrices() {
    let mut stream = RngStream::new(333);
    for trial in 0..6 {
        let n = 50;
        let a = random_matrix(n, n, &mut stream);
        let est = a.spectral_radius(1e-9, 20_000);
        let want = spectral_radius_oracle(n, a.data());
        let rel = (est.value - want).abs() / want;
        assert!(rel < 1e-3, "trial {trial}: est {} vs oracle {want} (rel {rel:.2e})", est.value);
    }
}

#[test]
fn spectral_radius_scaling_equivariance() {
    let mut stream = RngStream::new(4242);
    let a = random_matrix(30, 30, &mut stream);
    let base = a.spectral_radius(1e-10, 20_000).value;
    for &c in &[-2.0f64, 0.5, 3.0] {
        let mut scaled = a.clone();
        scaled.scale_in_place(c);
        let got = scaled.spectral_radius(1e-10, 20_000).value;
        let want = c.abs() * base;
        assert!(
            (got - want).abs() <= 1e-6 * want,
            "c = {c}: got {got}, want {want}"
        );
    }
}

// --------------------------------------------------------------------------
// random_sparse statistical contract.
// --------------------------------------------------------------------------

#[test]
fn random_sparse_density_and_range() {
    let n = 200;
    let density = 0.3;
    let mut stream = RngStream::new(99);
    let a = Matrix::random_sparse(n, density, -1.0, 1.0, &mut stream).unwrap();
    let nonzero = a.data().iter().filter(|v| **v != 0.0).count();
    let expect = (n * n) as f64 * density;
    let sigma = ((n * n) as f64 * density * (1.0 - density)).sqrt();
    assert!(
        (nonzero as f64 - expect).abs() < 4.0 * sigma,
        "nonzero {nonzero}, expect {expect}"
    );
    assert!(a.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    // Nonzero values should roughly fill the range, not cluster at an edge.
    let mean: f64 = a.data().iter().filter(|v| **v != 0.0).sum::<f64>() / nonzero as f64;
    assert!(mean.abs() < 0.05, "mean {mean}");
}

#[test]
fn random_sparse_is_deterministic_in_seed() {
    let mut s1 = RngStream::new(5150);
    let mut s2 = RngStream::new(5150);
    let a = Matrix::random_sparse(64, 0.2, -0.5, 0.5, &mut s1).unwrap();
    let b = Matrix::random_sparse(64, 0.2, -0.5, 0.5, &mut s2).unwrap();
    assert_eq!(a.data(), b.data());
    let mut s3 = RngStream::new(5151);
    let c = Matrix::random_sparse(64, 0.2, -0.5, 0.5, &mut s3).unwrap();
    assert_ne!(a.data(), c.data());
}

#[test]
fn random_uniform_covers_rectangle() {
    let mut stream = RngStream::new(31);
    let a = DenseMatrix::<f64>::random_uniform(20, 30, -0.1, 0.1, &mut stream);
    assert!(a.data().iter().all(|v| (-0.1..0.1).contains(v)));
    assert!(a.data().iter().any(|v| *v > 0.05));
    assert!(a.data().iter().any(|v| *v < -0.05));
}

// --------------------------------------------------------------------------
// Generic-scalar instantiation sanity (f32 path).
// --------------------------------------------------------------------------

#[test]
fn f32_kernels_agree_with_f64_to_single_precision() {
    let mut stream = RngStream::new(606);
    let data: Vec<f64> = (0..36).map(|_| stream.uniform(-1.0, 1.0)).collect();
    let a64 = Matrix::from_vec(6, 6, data.clone()).unwrap();
    let a32 =
        DenseMatrix::<f32>::from_vec(6, 6, data.iter().map(|v| *v as f32).collect()).unwrap();
    let p64 = a64.matmul(&a64).unwrap();
    let p32 = a32.matmul(&a32).unwrap();
    for (x, y) in p32.data().iter().zip(p64.data()) {
        assert!((f64::from(*x) - y).abs() < 1e-5);
    }
}
