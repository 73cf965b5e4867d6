//! Dense complex Hermitian linear algebra.
//!
//! Every operator function in the crate (`e^{-beta H}`, `e^{i alpha H}`,
//! Gaussian-broadened deltas) goes through [`eig_hermitian`], so the different
//! kernels are evaluated on exactly the same eigenbasis.
//!
//! The eigensolver is the classical two-phase scheme: Householder reduction of
//! the Hermitian matrix to a *real* symmetric tridiagonal form (the reflector
//! convention makes every subdiagonal entry real), followed by implicit QL
//! iterations with Wilkinson shifts on the tridiagonal matrix.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;

/// Absolute tolerance on `a_ij - conj(a_ji)` accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Largest dense dimension accepted for tensor products / extended operators.
pub const DEFAULT_DIMENSION_CAP: usize = 16_384;

const MAX_QL_ITERATIONS: usize = 60;

/// A Hermitian matrix on a finite Hilbert space (energies in units with hbar = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                context: "HermitianOperator (square matrix)",
                expected: rows,
                found: cols,
            });
        }
        if rows == 0 {
            return Err(Error::InvalidArgument("operator dimension must be >= 1".into()));
        }
        let deviation = hermiticity_deviation(entries.view());
        if !(deviation <= HERMITICITY_TOL) {
            return Err(Error::NonHermitianInput { deviation });
        }
        Ok(Self { entries })
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = CMatrix::zeros((n, n));
        for (i, &v) in values.iter().enumerate() {
            m[[i, i]] = C64::new(v, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }
}

/// Eigenvalues in ascending order with the unitary matrix of eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(f(lambda_n)) U^dagger`.
    pub fn apply<F>(&self, f: F) -> CMatrix
    where
        F: Fn(f64) -> C64,
    {
        let weights: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.apply_weights(&weights)
    }

    /// `U diag(weights) U^dagger` for precomputed per-eigenvalue weights.
    pub fn apply_weights(&self, weights: &[C64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (mut col, &w) in scaled.columns_mut().into_iter().zip(weights) {
            col.mapv_inplace(|z| z * w);
        }
        scaled.dot(&dagger(u.view()))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|l| C64::new(l, 0.0))
    }
}

/// Spectral decomposition of a Hermitian operator.
///
/// Only the lower triangle of the input is read; the hermiticity check in
/// [`HermitianOperator::new`] guarantees the upper triangle agrees with it.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    eig_hermitian_matrix(h.entries.view())
}

pub(crate) fn eig_hermitian_matrix(m: ArrayView2<'_, C64>) -> Result<SpectralDecomposition> {
    let n = m.nrows();
    if n == 1 {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![m[[0, 0]].re],
            eigenvectors: CMatrix::from_elem((1, 1), C64::new(1.0, 0.0)),
        });
    }

    // Row-major working copy, Hermitian-completed from the lower triangle.
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let z = m[[i, j]];
            a[i * n + j] = z;
            a[j * n + i] = z.conj();
        }
        a[i * n + i] = C64::new(m[[i, i]].re, 0.0);
    }

    let (diag, offdiag, q) = householder_tridiagonalize(&mut a, n);
    let (eigenvalues, zt) = tridiagonal_ql(diag, offdiag)?;

    // Eigenvectors of A are Q z_j where z_j are the tridiagonal eigenvectors (rows of zt).
    let z = Array2::from_shape_fn((n, n), |(k, j)| C64::new(zt[j * n + k], 0.0));
    let q = Array2::from_shape_vec((n, n), q).expect("shape");
    let vectors = q.dot(&z);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    let sorted_values = order.iter().map(|&i| eigenvalues[i]).collect();
    let sorted_vectors = Array2::from_shape_fn((n, n), |(r, c)| vectors[[r, order[c]]]);

    Ok(SpectralDecomposition {
        eigenvalues: sorted_values,
        eigenvectors: sorted_vectors,
    })
}

/// Reduces the Hermitian row-major matrix `a` to real tridiagonal form.
///
/// Returns `(d, e, q)` with `A = Q T Q^dagger`, `d` the diagonal of `T`,
/// `e[k] = T[k+1][k]` (real, length n-1) and `q` row-major.
fn householder_tridiagonalize(a: &mut [C64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<C64>) {
    let zero = C64::new(0.0, 0.0);
    let mut e = vec![0.0; n - 1];
    let mut taus = vec![zero; n - 1];
    // reflector k lives in column k below the subdiagonal: v = (1, a[k+2..n][k])
    let mut w = vec![zero; n];
    let mut y = vec![zero; n];
    let mut v = vec![zero; n];

    for k in 0..n - 1 {
        let m = n - k - 1;
        let alpha = a[(k + 1) * n + k];
        let xnorm = (k + 2..n)
            .map(|i| a[i * n + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if xnorm == 0.0 && alpha.im == 0.0 {
            taus[k] = zero;
            e[k] = alpha.re;
            continue;
        }
        let beta = -(alpha.norm().hypot(xnorm)).copysign(alpha.re);
        let tau = C64::new((beta - alpha.re) / beta, -alpha.im / beta);
        let scale = C64::new(1.0, 0.0) / (alpha - beta);
        v[0] = C64::new(1.0, 0.0);
        for i in 1..m {
            let idx = (k + 1 + i) * n + k;
            a[idx] *= scale;
            v[i] = a[idx];
        }
        taus[k] = tau;
        e[k] = beta;

        // Trailing block A22 <- H^dagger A22 H with H = I - tau v v^dagger.
        let off = k + 1;
        for i in 0..m {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            w[i] = row.iter().zip(&v[..m]).map(|(x, vj)| x * vj).sum();
        }
        let c: f64 = (0..m).map(|i| (v[i].conj() * w[i]).re).sum();
        let half = 0.5 * tau.norm_sqr() * c;
        for i in 0..m {
            y[i] = tau * w[i] - v[i] * half;
        }
        for i in 0..m {
            let (yi, vi) = (y[i], v[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for j in 0..m {
                row[j] -= yi * v[j].conj() + vi * y[j].conj();
            }
        }
    }

    let d = (0..n).map(|i| a[i * n + i].re).collect();

    // Q = H_0 H_1 ... H_{n-2}, accumulated backwards on shrinking trailing blocks.
    let mut q = vec![zero; n * n];
    for i in 0..n {
        q[i * n + i] = C64::new(1.0, 0.0);
    }
    let mut s = vec![zero; n];
    for k in (0..n - 1).rev() {
        let tau = taus[k];
        if tau == zero {
            continue;
        }
        let off = k + 1;
        let m = n - off;
        v[0] = C64::new(1.0, 0.0);
        for i in 1..m {
            v[i] = a[(off + i) * n + k];
        }
        // s = v^dagger Q_sub
        for sj in s[..m].iter_mut() {
            *sj = zero;
        }
        for i in 0..m {
            let vc = v[i].conj();
            let row = &q[(off + i) * n + off..(off + i) * n + n];
            for j in 0..m {
                s[j] += vc * row[j];
            }
        }
        for i in 0..m {
            let f = tau * v[i];
            let row = &mut q[(off + i) * n + off..(off + i) * n + n];
            for j in 0..m {
                row[j] -= f * s[j];
            }
        }
    }

    (d, e, q)
}

/// Implicit QL with Wilkinson shifts on a real symmetric tridiagonal matrix.
///
/// Returns the (unsorted) eigenvalues and the eigenvectors stored as rows of a
/// row-major matrix, so each Givens rotation touches two contiguous rows.
fn tridiagonal_ql(mut d: Vec<f64>, sub: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut e = sub;
    e.push(0.0);
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::ConvergenceFailure {
                    index: l,
                    iterations,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                let (head, tail) = zt.split_at_mut((i + 1) * n);
                let zi = &mut head[i * n..(i + 1) * n];
                let zi1 = &mut tail[..n];
                for (a0, a1) in zi.iter_mut().zip(zi1.iter_mut()) {
                    let f = *a1;
                    *a1 = s * *a0 + c * f;
                    *a0 = c * *a0 - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, zt))
}

/// `U diag(f(lambda_n)) U^dagger` for Hermitian `h`.
///
/// Eigenvalues are real, so `f` receives them as `f64`.
pub fn operator_function<F>(h: &HermitianOperator, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> C64,
{
    Ok(eig_hermitian(h)?.apply(f))
}

/// Kronecker product with the first factor as the slow (outer) index.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    tensor_product_with_cap(a, b, DEFAULT_DIMENSION_CAP)
}

pub fn tensor_product_with_cap(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let (m, m2) = a.dim();
    let (n, n2) = b.dim();
    if m != m2 || n != n2 {
        return Err(Error::DimensionMismatch {
            context: "tensor_product (square factors)",
            expected: m.max(n),
            found: m2.min(n2),
        });
    }
    let dim = m.saturating_mul(n);
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, cap });
    }
    Ok(Array2::from_shape_fn((dim, dim), |(r, c)| {
        a[[r / n, c / n]] * b[[r % n, c % n]]
    }))
}

pub fn dagger(m: ArrayView2<'_, C64>) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().iter().sum()
}

pub fn max_abs(m: ArrayView2<'_, C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn frobenius_norm(m: ArrayView2<'_, C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `max_ij |m_ij - conj(m_ji)|`; infinite for non-square input.
pub fn hermiticity_deviation(m: ArrayView2<'_, C64>) -> f64 {
    let (r, c) = m.dim();
    if r != c {
        return f64::INFINITY;
    }
    let mut dev: f64 = 0.0;
    for i in 0..r {
        for j in 0..=i {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d.is_nan() {
                return f64::NAN;
            }
            dev = dev.max(d);
        }
    }
    dev
}

/// `max_ij |(U^dagger U - 1)_ij|`.
pub fn unitarity_deviation(u: ArrayView2<'_, C64>) -> f64 {
    let prod = dagger(u).dot(&u);
    max_abs_diff(prod.view(), identity(u.nrows()).view())
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub(crate) fn solve_complex(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[[i, col]].norm().total_cmp(&lu[[j, col]].norm()))
            .expect("non-empty");
        if lu[[pivot, col]].norm() == 0.0 {
            return Err(Error::InvalidArgument("singular matrix in linear solve".into()));
        }
        if pivot != col {
            for j in 0..n {
                lu.swap([pivot, j], [col, j]);
            }
            for j in 0..x.ncols() {
                x.swap([pivot, j], [col, j]);
            }
        }
        let inv = C64::new(1.0, 0.0) / lu[[col, col]];
        for i in col + 1..n {
            let factor = lu[[i, col]] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let t = lu[[col, j]];
                lu[[i, j]] -= factor * t;
            }
            for j in 0..x.ncols() {
                let t = x[[col, j]];
                x[[i, j]] -= factor * t;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = C64::new(1.0, 0.0) / lu[[col, col]];
        for j in 0..x.ncols() {
            let mut acc = x[[col, j]];
            for k in col + 1..n {
                acc -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = acc * inv;
        }
    }
    Ok(x)
}
