//! Dense row-major matrices and the numeric kernels the pipeline needs:
//! products, a Cholesky solver for symmetric positive-definite systems,
//! a spectral-radius estimator, and seeded random matrix constructors.
//!
//! Everything is generic over [`Scalar`] (`f32`/`f64`); the rest of the crate
//! pins `f64` through the [`crate::Matrix`] alias. The kernels use fixed
//! summation orders so results are reproducible bit-for-bit for a given
//! build — several downstream guarantees (model-file byte identity, seed
//! reproducibility) lean on that.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Four-lane dot product: fixed association, independent accumulators so the
/// compiler can vectorize without reordering the mathematical result.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let lanes = n / 4 * 4;
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    let mut s3 = T::zero();
    let mut i = 0;
    while i < lanes {
        s0 = s0 + a[i] * b[i];
        s1 = s1 + a[i + 1] * b[i + 1];
        s2 = s2 + a[i + 2] * b[i + 2];
        s3 = s3 + a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = T::zero();
    while i < n {
        tail = tail + a[i] * b[i];
        i += 1;
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// Like [`zeros`](Self::zeros), but refuses gracefully when the buffer
    /// cannot be allocated. Dimension-dependent construction paths (Gram
    /// matrices, design matrices, reservoir weights) route through this so a
    /// configuration that is too large for the machine reports an error
    /// instead of aborting on allocation failure.
    pub fn try_zeros(rows: usize, cols: usize) -> Result<Self> {
        let len = rows.checked_mul(cols).ok_or_else(|| {
            Error::Allocation(format!("{rows}×{cols} matrix exceeds addressable size"))
        })?;
        let mut data = Vec::new();
        data.try_reserve_exact(len).map_err(|_| {
            Error::Allocation(format!(
                "cannot allocate a {rows}×{cols} matrix ({} bytes)",
                len.saturating_mul(std::mem::size_of::<T>())
            ))
        })?;
        data.resize(len, T::zero());
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                op: "from_vec",
                detail: format!("{rows}×{cols} needs {} values, got {}", rows * cols, data.len()),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Matrix with every entry drawn uniformly from `[low, high)`.
    pub fn random_uniform(rows: usize, cols: usize, low: f64, high: f64, stream: &mut RngStream) -> Self {
        let data = (0..rows * cols).map(|_| T::from_f64_lossy(stream.uniform(low, high))).collect();
        DenseMatrix { rows, cols, data }
    }

    /// Square matrix where each entry is independently nonzero with
    /// probability `density`, drawing its value uniformly from `[low, high)`.
    /// One gate draw is consumed per entry; a value draw only when the gate
    /// passes, so the sparsity pattern is independent of the value sequence.
    /// Fallible: `n` comes straight from user configuration and the buffer
    /// is n².
    pub fn random_sparse(
        n: usize,
        density: f64,
        low: f64,
        high: f64,
        stream: &mut RngStream,
    ) -> Result<Self> {
        let mut m = Self::try_zeros(n, n)?;
        for slot in &mut m.data {
            if stream.next_f64() < density {
                *slot = T::from_f64_lossy(stream.uniform(low, high));
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Row-major product, `self · rhs`. The k-in-the-middle loop order keeps
    /// both operands streaming forward in memory.
    pub fn matmul(&self, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != rhs.rows {
            return Err(Error::Shape {
                op: "matmul",
                detail: format!(
                    "{}×{} · {}×{}: inner dimensions differ",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &aik) in arow.iter().enumerate() {
                let brow = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = *o + aik * b;
                }
            }
        }
        Ok(out)
    }

    /// Symmetric Gram product `self · selfᵀ`, computing only the lower
    /// triangle (rows are contiguous, so each entry is one slice dot) and
    /// mirroring it. Roughly half the work of `matmul(&self.transpose())`.
    /// The output is rows×rows and grows quadratically in feature dimension,
    /// so its allocation is fallible.
    pub fn gram(&self) -> Result<DenseMatrix<T>> {
        let n = self.rows;
        let mut out = Self::try_zeros(n, n)?;
        for i in 0..n {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        Ok(out)
    }

    /// Matrix–vector product.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Shape {
                op: "matvec",
                detail: format!("matrix is {}×{}, vector has {}", self.rows, self.cols, x.len()),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// Like [`matvec`](Self::matvec) but writing into a caller buffer;
    /// shapes are the caller's responsibility (hot path).
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = dot(self.row(i), x);
        }
    }

    pub fn scale_in_place(&mut self, c: T) {
        for v in &mut self.data {
            *v = *v * c;
        }
    }

    pub fn add_diagonal(&mut self, v: T) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self.data[i * self.cols + i] = self.data[i * self.cols + i] + v;
        }
    }

    pub fn frobenius_norm(&self) -> T {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Lower-triangular Cholesky factor `L` with `L·Lᵀ = self`.
    ///
    /// Fails with the offending pivot index when the matrix is not positive
    /// definite to working precision.
    pub fn cholesky(&self) -> Result<DenseMatrix<T>> {
        if self.rows != self.cols {
            return Err(Error::Shape {
                op: "cholesky",
                detail: format!("matrix is {}×{}, must be square", self.rows, self.cols),
            });
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                let v = self.data[i * n + j] - s;
                if i == j {
                    if v <= T::zero() || !v.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            index: i,
                            value: v.to_f64_lossy(),
                        });
                    }
                    l.data[i * n + i] = v.sqrt();
                } else {
                    l.data[i * n + j] = v / l.data[j * n + j];
                }
            }
        }
        Ok(l)
    }

    /// Solve `self · Z = rhs` for symmetric positive-definite `self` via
    /// Cholesky factorization and two triangular substitutions per column.
    pub fn solve_spd(&self, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.rows != rhs.rows {
            return Err(Error::Shape {
                op: "solve_spd",
                detail: format!(
                    "matrix is {}×{}, right-hand side has {} rows",
                    self.rows, self.cols, rhs.rows
                ),
            });
        }
        let l = self.cholesky()?;
        let n = self.rows;
        let k = rhs.cols;
        let mut out = Self::zeros(n, k);
        let mut col = vec![T::zero(); n];
        for c in 0..k {
            for i in 0..n {
                col[i] = rhs.data[i * k + c];
            }
            // Forward: L·y = b.
            for i in 0..n {
                let s = dot(&l.data[i * n..i * n + i], &col[..i]);
                col[i] = (col[i] - s) / l.data[i * n + i];
            }
            // Backward: Lᵀ·z = y.
            for i in (0..n).rev() {
                let mut s = T::zero();
                for r in i + 1..n {
                    s = s + l.data[r * n + i] * col[r];
                }
                col[i] = (col[i] - s) / l.data[i * n + i];
            }
            for i in 0..n {
                out.data[i * k + c] = col[i];
            }
        }
        Ok(out)
    }

    /// Spectral-radius estimate by power iteration with a two-step linear
    /// recurrence fit.
    ///
    /// Plain power iteration fails to settle when the dominant eigenvalues
    /// are a complex-conjugate pair (the iterate rotates forever), which is
    /// the common case for the random reservoir matrices this estimator
    /// exists for. Each pass therefore applies the matrix twice and solves
    /// the least-squares recurrence `A²v ≈ a·Av + b·v`; the dominant modulus
    /// follows from the recurrence roots, which handles both a real dominant
    /// eigenvalue and a conjugate pair. Every stopping rule depends only on
    /// scale-invariant quantities, so the estimate commutes with matrix
    /// scaling to rounding accuracy — reservoir construction rescales weight
    /// matrices through this property.
    ///
    /// Returns the best estimate with `converged = false` when `max_iters`
    /// passes did not stabilize it. A zero matrix reports radius 0.
    pub fn spectral_radius(&self, tol: f64, max_iters: usize) -> RadiusEstimate<T> {
        assert_eq!(self.rows, self.cols, "spectral_radius needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return RadiusEstimate { value: T::zero(), converged: true, iterations: 0 };
        }
        let m = self.max_abs().to_f64_lossy();
        if m == 0.0 {
            return RadiusEstimate { value: T::zero(), converged: true, iterations: 0 };
        }
        // Pre-scale by the power of two bracketing the largest entry. The
        // scaling is exact in floating point, prevents overflow for extreme
        // inputs, and keeps every iterate O(1).
        let exp = m.log2().ceil().min(1_000.0).max(-1_000.0);
        let scale = 2f64.powi(exp as i32);
        let inv = T::from_f64_lossy(1.0 / scale);
        let mut b = self.clone();
        b.scale_in_place(inv);

        let tol_t = tol.max(1e-15);
        let collapse = 1e-14 * n as f64;
        let mut v: Vec<T> = vec![T::from_f64_lossy(1.0 / (n as f64).sqrt()); n];
        let mut w = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut restart_stream = RngStream::new(0x7E5C_0FFE_E5EE_D000);
        let mut collapse_restarts = 2u32;
        let mut stagnation_restart = true;
        let mut prev: Option<f64> = None;
        let mut est = 0.0f64;
        let mut stable = 0u32;

        let mut pass = 0usize;
        while pass < max_iters {
            pass += 1;
            b.matvec_into(&v, &mut w);
            let nw = dot(&w, &w).sqrt().to_f64_lossy();
            if nw <= collapse {
                if collapse_restarts > 0 {
                    collapse_restarts -= 1;
                    for slot in &mut v {
                        *slot = T::from_f64_lossy(restart_stream.uniform(-1.0, 1.0));
                    }
                    normalize(&mut v);
                    prev = None;
                    stable = 0;
                    continue;
                }
                // Repeated collapse from independent starts: nilpotent.
                return RadiusEstimate { value: T::zero(), converged: true, iterations: pass };
            }
            // Normalize w in place (wn), keeping nw for the recurrence scale.
            let nw_t = T::from_f64_lossy(1.0 / nw);
            for slot in &mut w {
                *slot = *slot * nw_t;
            }
            b.matvec_into(&w, &mut y);

            // Least squares for y ≈ α·wn + β·v over the 2-D Krylov basis.
            let g01 = dot(&w, &v).to_f64_lossy();
            let r0 = dot(&y, &w).to_f64_lossy();
            let r1 = dot(&y, &v).to_f64_lossy();
            let det = 1.0 - g01 * g01;
            let step_est = if det < 1e-12 {
                // v is already an eigenvector direction: |λ| = ‖Bv‖.
                nw
            } else {
                let alpha = (r0 - g01 * r1) / det;
                let beta = (r1 - g01 * r0) / det;
                let a_coef = alpha;
                let b_coef = beta * nw;
                let disc = a_coef * a_coef + 4.0 * b_coef;
                if disc >= 0.0 {
                    let root = disc.sqrt();
                    0.5 * (a_coef + root).abs().max((a_coef - root).abs())
                } else {
                    (-b_coef).sqrt()
                }
            };
            est = step_est;

            if let Some(p) = prev {
                let rel = (est - p).abs() / est.abs().max(1e-300);
                if rel <= tol_t {
                    stable += 1;
                    if stable >= 3 {
                        return RadiusEstimate {
                            value: T::from_f64_lossy(est * scale),
                            converged: true,
                            iterations: pass,
                        };
                    }
                } else {
                    stable = 0;
                }
            }
            prev = Some(est);

            // One random restart if the estimate has not begun to settle by
            // half the budget (pathological start vector).
            if stagnation_restart && pass == max_iters / 2 && stable == 0 {
                stagnation_restart = false;
                for slot in &mut v {
                    *slot = T::from_f64_lossy(restart_stream.uniform(-1.0, 1.0));
                }
                normalize(&mut v);
                prev = None;
                continue;
            }

            // Advance two steps: v ← y / ‖y‖.
            let ny = dot(&y, &y).sqrt().to_f64_lossy();
            if ny <= collapse {
                if collapse_restarts > 0 {
                    collapse_restarts -= 1;
                    for slot in &mut v {
                        *slot = T::from_f64_lossy(restart_stream.uniform(-1.0, 1.0));
                    }
                    normalize(&mut v);
                    prev = None;
                    stable = 0;
                    continue;
                }
                return RadiusEstimate { value: T::zero(), converged: true, iterations: pass };
            }
            let ny_t = T::from_f64_lossy(1.0 / ny);
            for (vi, yi) in v.iter_mut().zip(&y) {
                *vi = *yi * ny_t;
            }
        }
        RadiusEstimate {
            value: T::from_f64_lossy(est * scale),
            converged: false,
            iterations: max_iters,
        }
    }
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = dot(v, v).sqrt();
    if n > T::zero() {
        let inv = T::one() / n;
        for slot in v {
            *slot = *slot * inv;
        }
    }
}

/// Result of [`DenseMatrix::spectral_radius`].
#[derive(Debug, Clone, Copy)]
pub struct RadiusEstimate<T> {
    pub value: T,
    pub converged: bool,
    pub iterations: usize,
}

/// Compressed sparse row snapshot of a dense matrix, for repeated
/// matrix–vector products against low-density reservoir weights.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<u32>,
    col_idx: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0u32);
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if v != T::zero() {
                    col_idx.push(c as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len() as u32);
        }
        CsrMatrix { rows: m.rows(), cols: m.cols(), row_ptr, col_idx, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let lo = self.row_ptr[r] as usize;
            let hi = self.row_ptr[r + 1] as usize;
            let mut acc = T::zero();
            for k in lo..hi {
                acc = acc + self.vals[k] * x[self.col_idx[k] as usize];
            }
            out[r] = acc;
        }
    }
}
