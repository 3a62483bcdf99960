//! Shared oracles for integration tests.
//!
//! Everything here is deliberately written from first principles with
//! algorithms *different* from the library's own (naive triple loops,
//! Gauss–Jordan elimination, a shifted QR eigensolver, plain gradient
//! descent), so agreement between the two paths is meaningful evidence of
//! correctness rather than a tautology.

#![allow(dead_code)]

// ---------------------------------------------------------------------------
// Minimal complex arithmetic for the eigensolver oracle.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl Cx {
    pub const ZERO: Cx = Cx { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Cx {
        Cx { re, im }
    }

    pub fn real(re: f64) -> Cx {
        Cx { re, im: 0.0 }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> Cx {
        Cx::new(self.re, -self.im)
    }

    pub fn scale(self, s: f64) -> Cx {
        Cx::new(self.re * s, self.im * s)
    }

    /// Principal square root.
    pub fn sqrt(self) -> Cx {
        let r = self.abs();
        if r == 0.0 {
            return Cx::ZERO;
        }
        let re = ((r + self.re) * 0.5).max(0.0).sqrt();
        let im_mag = ((r - self.re) * 0.5).max(0.0).sqrt();
        let im = if self.im < 0.0 { -im_mag } else { im_mag };
        Cx::new(re, im)
    }
}

impl std::ops::Add for Cx {
    type Output = Cx;
    fn add(self, o: Cx) -> Cx {
        Cx::new(self.re + o.re, self.im + o.im)
    }
}

impl std::ops::Sub for Cx {
    type Output = Cx;
    fn sub(self, o: Cx) -> Cx {
        Cx::new(self.re - o.re, self.im - o.im)
    }
}

impl std::ops::Mul for Cx {
    type Output = Cx;
    fn mul(self, o: Cx) -> Cx {
        Cx::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl std::ops::Div for Cx {
    type Output = Cx;
    fn div(self, o: Cx) -> Cx {
        let d = o.re * o.re + o.im * o.im;
        Cx::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
}

// ---------------------------------------------------------------------------
// Naive dense kernels.
// ---------------------------------------------------------------------------

/// Triple-loop matrix product of row-major buffers: (m×k)·(k×n) → m×n.
pub fn naive_matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for t in 0..k {
                acc += a[i * k + t] * b[t * n + j];
            }
            c[i * n + j] = acc;
        }
    }
    c
}

/// Gauss–Jordan inverse with partial pivoting. Returns `None` when a pivot
/// collapses (singular to working precision).
pub fn gauss_jordan_inverse(n: usize, data: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(data.len(), n * n);
    let mut a = data.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[pivot * n + col].abs() {
                pivot = r;
            }
        }
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let p = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] -= f * a[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    Some(inv)
}

// ---------------------------------------------------------------------------
// Dense eigensolver: Householder Hessenberg reduction + shifted complex QR.
// ---------------------------------------------------------------------------

/// Reduce a real square matrix (row-major) to upper Hessenberg form by
/// orthogonal similarity. Returns the Hessenberg matrix.
fn hessenberg(n: usize, data: &[f64]) -> Vec<f64> {
    let mut a = data.to_vec();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k, rows k+1..n.
        let mut norm2 = 0.0;
        for r in k + 1..n {
            norm2 += a[r * n + k] * a[r * n + k];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k + 1] = x0 - alpha;
        for r in k + 2..n {
            v[r] = a[r * n + k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // Left: A ← (I − β v vᵀ) A
        for j in 0..n {
            let mut dot = 0.0;
            for r in k + 1..n {
                dot += v[r] * a[r * n + j];
            }
            let f = beta * dot;
            for r in k + 1..n {
                a[r * n + j] -= f * v[r];
            }
        }
        // Right: A ← A (I − β v vᵀ)
        for i in 0..n {
            let mut dot = 0.0;
            for c in k + 1..n {
                dot += a[i * n + c] * v[c];
            }
            let f = beta * dot;
            for c in k + 1..n {
                a[i * n + c] -= f * v[c];
            }
        }
    }
    // Sweep rounding dust below the first subdiagonal.
    for r in 0..n {
        for c in 0..r.saturating_sub(1) {
            a[r * n + c] = 0.0;
        }
    }
    a
}

/// Eigenvalues of the trailing/leading 2×2 complex block `[a b; c d]`.
fn eig_2x2(a: Cx, b: Cx, c: Cx, d: Cx) -> (Cx, Cx) {
    let half_tr = (a + d).scale(0.5);
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    (half_tr + disc, half_tr - disc)
}

/// All eigenvalue moduli of a real square matrix, sorted descending.
///
/// Shifted QR iteration on the complex Hessenberg form with deflation; each
/// sweep annihilates the subdiagonal with 2×2 unitary reflectors. This is a
/// test oracle: O(n³) per sweep and no balancing, fine for n ≤ ~80.
pub fn eigen_moduli(n: usize, data: &[f64]) -> Vec<f64> {
    assert_eq!(data.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![data[0].abs()];
    }
    let hess = hessenberg(n, data);
    let mut h: Vec<Cx> = hess.iter().map(|&x| Cx::real(x)).collect();
    let idx = |r: usize, c: usize| r * n + c;

    let mut eigs: Vec<Cx> = Vec::with_capacity(n);
    let mut hi = n - 1; // active block is rows/cols 0..=hi of the deflating matrix
    let mut iters_since_deflate = 0usize;
    let mut total_iters = 0usize;
    let max_total = 400 * n;

    'outer: loop {
        // Deflate converged trailing eigenvalues.
        loop {
            if hi == 0 {
                eigs.push(h[idx(0, 0)]);
                break 'outer;
            }
            let sub = h[idx(hi, hi - 1)].abs();
            let scale = h[idx(hi, hi)].abs() + h[idx(hi - 1, hi - 1)].abs();
            if sub <= 1e-14 * scale.max(1e-300) {
                eigs.push(h[idx(hi, hi)]);
                hi -= 1;
                iters_since_deflate = 0;
            } else if hi == 1 {
                let (l1, l2) = eig_2x2(h[idx(0, 0)], h[idx(0, 1)], h[idx(1, 0)], h[idx(1, 1)]);
                eigs.push(l1);
                eigs.push(l2);
                break 'outer;
            } else {
                break;
            }
        }

        // Find the start of the unreduced trailing block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[idx(lo, lo - 1)].abs();
            let scale = h[idx(lo, lo)].abs() + h[idx(lo - 1, lo - 1)].abs();
            if sub <= 1e-14 * scale.max(1e-300) {
                break;
            }
            lo -= 1;
        }
        if hi - lo == 1 {
            // Isolated 2×2 block: take its eigenvalues directly.
            let (l1, l2) =
                eig_2x2(h[idx(lo, lo)], h[idx(lo, hi)], h[idx(hi, lo)], h[idx(hi, hi)]);
            eigs.push(l1);
            eigs.push(l2);
            if lo == 0 {
                break 'outer;
            }
            hi = lo - 1;
            iters_since_deflate = 0;
            continue;
        }

        total_iters += 1;
        iters_since_deflate += 1;
        assert!(total_iters < max_total, "QR oracle failed to converge");

        // Wilkinson shift from the trailing 2×2; exceptional shift if stalled.
        let (s1, s2) = eig_2x2(
            h[idx(hi - 1, hi - 1)],
            h[idx(hi - 1, hi)],
            h[idx(hi, hi - 1)],
            h[idx(hi, hi)],
        );
        let target = h[idx(hi, hi)];
        let mut mu = if (s1 - target).abs() <= (s2 - target).abs() { s1 } else { s2 };
        if iters_since_deflate > 0 && iters_since_deflate % 12 == 0 {
            // Exceptional shift to break rare cycling.
            mu = mu + Cx::new(h[idx(hi, hi - 1)].abs(), 0.0);
        }

        for d in lo..=hi {
            h[idx(d, d)] = h[idx(d, d)] - mu;
        }

        // QR factorization of the shifted Hessenberg block with 2×2 unitary
        // reflectors; store them to form RQ afterwards.
        let mut rots: Vec<Option<[Cx; 4]>> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let f = h[idx(k, k)];
            let g = h[idx(k + 1, k)];
            if g.abs() == 0.0 {
                rots.push(None);
                continue;
            }
            // Complex Householder on the 2-vector [f, g]: maps it to [beta, 0].
            let norm = (f.abs() * f.abs() + g.abs() * g.abs()).sqrt();
            let phase = if f.abs() == 0.0 { Cx::real(1.0) } else { f.scale(1.0 / f.abs()) };
            let beta = phase.scale(-norm);
            let v0 = f - beta;
            let v1 = g;
            let vn2 = v0.abs() * v0.abs() + v1.abs() * v1.abs();
            let tau = 2.0 / vn2;
            // U = I − tau·v v^H  (2×2, unitary, Hermitian)
            let u00 = Cx::real(1.0) - (v0 * v0.conj()).scale(tau);
            let u01 = (v0 * v1.conj()).scale(-tau);
            let u10 = (v1 * v0.conj()).scale(-tau);
            let u11 = Cx::real(1.0) - (v1 * v1.conj()).scale(tau);
            // Apply on the left to rows k, k+1 (columns k..=hi).
            for c in k..=hi {
                let a = h[idx(k, c)];
                let b = h[idx(k + 1, c)];
                h[idx(k, c)] = u00 * a + u01 * b;
                h[idx(k + 1, c)] = u10 * a + u11 * b;
            }
            h[idx(k + 1, k)] = Cx::ZERO;
            rots.push(Some([u00, u01, u10, u11]));
        }
        // Right-multiply by U_k^H in order: H ← R·U_lo^H·…  (U Hermitian ⇒ U^H = U).
        for (k_off, rot) in rots.iter().enumerate() {
            let k = lo + k_off;
            if let Some([u00, u01, u10, u11]) = rot {
                let rmax = (k + 2).min(hi + 1);
                for r in lo..rmax {
                    let a = h[idx(r, k)];
                    let b = h[idx(r, k + 1)];
                    h[idx(r, k)] = a * *u00 + b * *u10;
                    h[idx(r, k + 1)] = a * *u01 + b * *u11;
                }
            }
        }
        for d in lo..=hi {
            h[idx(d, d)] = h[idx(d, d)] + mu;
        }
    }

    let mut moduli: Vec<f64> = eigs.iter().map(|e| e.abs()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    moduli
}

/// Largest eigenvalue modulus — the oracle counterpart of the library's
/// power-iteration estimate.
pub fn spectral_radius_oracle(n: usize, data: &[f64]) -> f64 {
    eigen_moduli(n, data).first().copied().unwrap_or(0.0)
}

// ---------------------------------------------------------------------------
// Ridge regression oracle: plain gradient descent on the regularized
// least-squares objective ‖Y − W·X‖²_F + λ‖W‖²_F.
// ---------------------------------------------------------------------------

/// Returns the row-major C×F weight matrix minimizing the ridge objective,
/// found by gradient descent with an explicit Lipschitz step size.
///
/// `x` is F×S (features × samples), `y` is C×S (one-hot targets × samples).
pub fn ridge_gd_oracle(
    f: usize,
    s: usize,
    c: usize,
    x: &[f64],
    y: &[f64],
    lambda: f64,
    max_iters: usize,
) -> Vec<f64> {
    assert_eq!(x.len(), f * s);
    assert_eq!(y.len(), c * s);
    // Precompute A = X·Xᵀ + λI (F×F) and B = Y·Xᵀ (C×F); ∇ = 2(W·A − B).
    let mut a = vec![0.0; f * f];
    for i in 0..f {
        for j in 0..f {
            let mut acc = 0.0;
            for t in 0..s {
                acc += x[i * s + t] * x[j * s + t];
            }
            a[i * f + j] = acc;
        }
    }
    for i in 0..f {
        a[i * f + i] += lambda;
    }
    let mut b = vec![0.0; c * f];
    for i in 0..c {
        for j in 0..f {
            let mut acc = 0.0;
            for t in 0..s {
                acc += y[i * s + t] * x[j * s + t];
            }
            b[i * f + j] = acc;
        }
    }
    // Step size from the dominant eigenvalue of A (symmetric PSD, so plain
    // power iteration on A is reliable here).
    let mut v = vec![1.0 / (f as f64).sqrt(); f];
    let mut lmax = 0.0;
    for _ in 0..200 {
        let mut w = vec![0.0; f];
        for i in 0..f {
            let mut acc = 0.0;
            for j in 0..f {
                acc += a[i * f + j] * v[j];
            }
            w[i] = acc;
        }
        let n2: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n2 == 0.0 {
            break;
        }
        lmax = n2;
        for i in 0..f {
            v[i] = w[i] / n2;
        }
    }
    let step = 1.0 / (2.0 * lmax.max(lambda));
    let lmin = lambda; // A ⪰ λI, so the gradient bound below is valid.

    let mut w = vec![0.0; c * f];
    let mut grad = vec![0.0; c * f];
    for _ in 0..max_iters {
        // grad = 2(W·A − B)
        let mut gnorm2 = 0.0;
        for i in 0..c {
            for j in 0..f {
                let mut acc = 0.0;
                for t in 0..f {
                    acc += w[i * f + t] * a[t * f + j];
                }
                let g = 2.0 * (acc - b[i * f + j]);
                grad[i * f + j] = g;
                gnorm2 += g * g;
            }
        }
        // ‖W − W*‖ ≤ ‖∇‖/(2λmin); stop once that bound is negligible.
        if gnorm2.sqrt() / (2.0 * lmin) < 1e-10 {
            break;
        }
        for i in 0..c * f {
            w[i] -= step * grad[i];
        }
    }
    w
}

// ---------------------------------------------------------------------------
// SVM dual oracle: projected gradient ascent on the soft-margin dual,
// deliberately nothing like SMO. The feasible set {0 ≤ α ≤ C, yᵀα = 0} is
// handled by exact Euclidean projection, computed per step by bisecting on
// the multiplier of the equality constraint.
// ---------------------------------------------------------------------------

/// Maximize `Σαᵢ − ½·αᵀQα` with `Q_ij = yᵢyⱼKᵢⱼ` over the box–hyperplane
/// intersection. `kernel` is the row-major n×n Gram matrix, `y ∈ {−1,+1}`.
/// Returns the dual variables α.
pub fn svm_dual_pg_oracle(kernel: &[f64], y: &[f64], c: f64, max_iters: usize) -> Vec<f64> {
    let n = y.len();
    assert_eq!(kernel.len(), n * n);

    // Projection of `v` onto {0 ≤ α ≤ C, yᵀα = 0}: components are
    // clip(vᵢ − ν·yᵢ) with ν chosen so the constraint holds; the constraint
    // value is continuous and non-increasing in ν, so bisection suffices.
    let project = |v: &[f64]| -> Vec<f64> {
        let constraint = |nu: f64| -> f64 {
            v.iter()
                .zip(y)
                .map(|(&vi, &yi)| yi * (vi - nu * yi).clamp(0.0, c))
                .sum()
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        while constraint(lo) < 0.0 {
            lo *= 2.0;
            assert!(lo > -1e12, "projection bracket failed low");
        }
        while constraint(hi) > 0.0 {
            hi *= 2.0;
            assert!(hi < 1e12, "projection bracket failed high");
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if constraint(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let nu = 0.5 * (lo + hi);
        v.iter().zip(y).map(|(&vi, &yi)| (vi - nu * yi).clamp(0.0, c)).collect()
    };

    // Lipschitz constant of the gradient = λmax(Q), via power iteration.
    let qmul = |src: &[f64], dst: &mut [f64]| {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += y[i] * y[j] * kernel[i * n + j] * src[j];
            }
            dst[i] = acc;
        }
    };
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut w = vec![0.0; n];
    let mut lmax: f64 = 0.0;
    for _ in 0..200 {
        qmul(&v, &mut w);
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lmax = norm;
        for i in 0..n {
            v[i] = w[i] / norm;
        }
    }
    let step = 1.0 / lmax.max(1e-12);

    let mut alpha = project(&vec![0.0; n]);
    let mut qa = vec![0.0; n];
    for _ in 0..max_iters {
        qmul(&alpha, &mut qa);
        let ascent: Vec<f64> = alpha
            .iter()
            .zip(&qa)
            .map(|(&a, &q)| a + step * (1.0 - q))
            .collect();
        let next = project(&ascent);
        let moved: f64 = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        alpha = next;
        if moved < 1e-12 {
            break;
        }
    }
    alpha
}

/// Bias for a dual solution, taken as the midpoint of the KKT bounds (the
/// same rule the production solver uses, evaluated on the oracle's α).
pub fn svm_bias_from_alphas(kernel: &[f64], y: &[f64], c: f64, alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let mut qa = 0.0;
        for j in 0..n {
            qa += y[t] * y[j] * kernel[t * n + j] * alpha[j];
        }
        let grad = qa - 1.0;
        let v = -y[t] * grad;
        let can_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let can_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if can_up && v > m_up {
            m_up = v;
        }
        if can_low && v < m_low {
            m_low = v;
        }
    }
    if m_up.is_finite() && m_low.is_finite() {
        (m_up + m_low) / 2.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Small helpers shared by several integration suites.
// ---------------------------------------------------------------------------

/// Relative Frobenius distance between two equally-sized buffers.
pub fn rel_frobenius(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}
