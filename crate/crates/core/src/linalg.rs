//! Dense linear algebra on row-major `f64` matrices.
//!
//! Everything here is written for desk-scale problems (a few hundred rows and
//! columns at most). The SVD is a one-sided Jacobi (Hestenes) sweep and the
//! symmetric eigensolver is the cyclic two-sided Jacobi method; both are slow
//! compared to bidiagonalization-based routines but are accurate to a few ulps
//! of the Frobenius norm and fully deterministic.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative rank tolerance used when callers have no better information.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const JACOBI_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting shape mismatches and
    /// non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>], rows: usize) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// Single-row matrix.
    pub fn row_vector(v: &[f64]) -> Self {
        Self { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius inner product `Tr(selfᵀ other)`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        dot(&self.data, &other.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrize(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Self {
        if self.rows == 0 {
            return other.clone();
        }
        if other.rows == 0 {
            return self.clone();
        }
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// vector helpers

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

// ---------------------------------------------------------------------------
// SVD

/// Thin singular value decomposition `M = U diag(s) Vᵀ`.
///
/// For an `r x c` input, `u` is `r x k`, `v` is `c x k` with `k = min(r, c)`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let k = self.singular_values.len();
        let us = DenseMatrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.singular_values[j]);
        us.matmul(&self.v.transpose())
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

pub fn svd(m: &DenseMatrix) -> SvdResult {
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return SvdResult { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    svd_tall(m)
}

/// One-sided Jacobi on a matrix with `rows >= cols`.
fn svd_tall(m: &DenseMatrix) -> SvdResult {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return SvdResult {
            u: DenseMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(0, 0),
        };
    }
    // Column-major working copy so rotations touch contiguous memory.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= JACOBI_EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let smax = norms[order[0]];
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut s = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    for &j in &order {
        let sj = norms[j];
        s.push(sj);
        v_cols.push(v[j].clone());
        if sj > smax * 1e-300 && sj > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / sj).collect());
        } else {
            u_cols.push(Vec::new());
        }
    }
    // Complete U for (numerically) zero singular values with Gram-Schmidt.
    let mut next_basis = 0usize;
    for k in 0..cols {
        if !u_cols[k].is_empty() {
            continue;
        }
        loop {
            assert!(next_basis < rows, "cannot complete orthonormal basis");
            let mut e = vec![0.0; rows];
            e[next_basis] = 1.0;
            next_basis += 1;
            for _ in 0..2 {
                for other in u_cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(other, &e);
                    axpy(-proj, other, &mut e);
                }
            }
            let n = norm2(&e);
            if n > 1e-8 {
                u_cols[k] = e.iter().map(|x| x / n).collect();
                break;
            }
        }
    }

    SvdResult {
        u: DenseMatrix::from_columns(&u_cols, rows),
        singular_values: s,
        v: DenseMatrix::from_columns(&v_cols, cols),
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Number of singular values above `tol * s_max`.
pub fn rank(m: &DenseMatrix, tol: f64) -> usize {
    rank_from_singular_values(&svd(m).singular_values, tol)
}

pub fn rank_from_singular_values(s: &[f64], tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Orthonormal basis (as columns) of the numerical null space of `m`.
pub fn null_space_basis(m: &DenseMatrix, tol: f64) -> DenseMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DenseMatrix::zeros(0, 0);
    }
    // Pad with zero rows so the right singular vectors span all of R^cols.
    let padded = if rows < cols { m.vstack(&DenseMatrix::zeros(cols - rows, cols)) } else { m.clone() };
    let dec = svd(&padded);
    let r = rank_from_singular_values(&dec.singular_values, tol);
    let idx: Vec<usize> = (r..cols).collect();
    dec.v.select_columns(&idx)
}

/// Moore-Penrose pseudo-inverse with relative truncation `tol`.
pub fn pseudo_inverse(l: &DenseMatrix, tol: f64) -> DenseMatrix {
    let dec = svd(l);
    let r = rank_from_singular_values(&dec.singular_values, tol);
    let mut out = DenseMatrix::zeros(l.cols(), l.rows());
    for k in 0..r {
        let inv = 1.0 / dec.singular_values[k];
        for i in 0..l.cols() {
            let vik = dec.v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..l.rows() {
                out[(i, j)] += vik * dec.u[(j, k)];
            }
        }
    }
    out
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
pub fn lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "lstsq: {} rows vs right-hand side of length {}",
            a.rows(),
            b.len()
        )));
    }
    Ok(pseudo_inverse(a, DEFAULT_RANK_TOL).matvec(b))
}

/// Solves a square system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-13` relative to the largest entry.
pub fn solve_square(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let scale = a.max_abs();
    if n == 0 {
        return Some(Vec::new());
    }
    if scale == 0.0 {
        return None;
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= 1e-13 * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// symmetric eigendecomposition

/// Eigenvalues (nonincreasing) and matching orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigensolver. Only the symmetric part of `m` is used.
pub fn symmetric_eigen(m: &DenseMatrix) -> SymmetricEigen {
    let n = m.rows();
    assert_eq!(n, m.cols(), "symmetric_eigen needs a square matrix");
    let mut a = m.symmetrize();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total = a.frobenius_norm();
        if off.sqrt() <= JACOBI_EPS * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap().then(i.cmp(&j)));
    SymmetricEigen { values: order.iter().map(|&i| diag[i]).collect(), vectors: v.select_columns(&order) }
}

// ---------------------------------------------------------------------------
// operator norm

/// Power-iteration estimate of the largest singular value of a linear map
/// given only through `apply` (R^dim_in -> R^k) and its `adjoint`.
pub fn op_norm_estimate<F, G>(apply: F, adjoint: G, dim_in: usize, iters: usize, seed: u64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if dim_in == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..dim_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n0 = norm2(&x);
    x.iter_mut().for_each(|v| *v /= n0);
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let ax = apply(&x);
        estimate = norm2(&ax);
        let z = adjoint(&ax);
        let nz = norm2(&z);
        if nz == 0.0 {
            return 0.0;
        }
        x = z.into_iter().map(|v| v / nz).collect();
    }
    let ax = apply(&x);
    estimate.max(norm2(&ax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn assert_orthonormal_columns(q: &DenseMatrix, tol: f64) {
        let g = q.transpose().matmul(q);
        let err = g.sub(&DenseMatrix::identity(q.cols())).max_abs();
        assert!(err < tol, "orthonormality error {err}");
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let s = svd(&DenseMatrix::identity(3)).singular_values;
        assert_eq!(s, vec![1.0, 1.0, 1.0]);
        let s = svd(&DenseMatrix::from_diag(&[1.0, 3.0, 2.0])).singular_values;
        assert_eq!(s, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_reconstructs_random_rectangular() {
        for (r, c, seed) in [(5, 3, 1), (3, 5, 2), (8, 8, 3), (1, 4, 4), (12, 2, 5)] {
            let m = random_matrix(r, c, seed);
            let d = svd(&m);
            let err = d.reconstruct().sub(&m).frobenius_norm();
            assert!(err <= 1e-10 * m.frobenius_norm(), "{r}x{c}: {err}");
            assert_orthonormal_columns(&d.u, 1e-12);
            assert_orthonormal_columns(&d.v, 1e-12);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_rank_deficient_completes_u() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 0.0]]).unwrap();
        let d = svd(&m);
        assert_orthonormal_columns(&d.u, 1e-12);
        assert!(d.singular_values[1] < 1e-14);
        assert!(d.reconstruct().sub(&m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn svd_empty() {
        let d = svd(&DenseMatrix::zeros(0, 3));
        assert!(d.singular_values.is_empty());
        let d = svd(&DenseMatrix::zeros(4, 0));
        assert!(d.singular_values.is_empty());
    }

    #[test]
    fn rank_cases() {
        assert_eq!(rank(&DenseMatrix::zeros(3, 4), DEFAULT_RANK_TOL), 0);
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0, 1.0, -1.0];
        let outer = DenseMatrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        assert_eq!(rank(&outer, DEFAULT_RANK_TOL), 1);

        let mut m = random_matrix(4, 4, 11);
        for j in 0..4 {
            m[(3, j)] = m[(1, j)];
        }
        assert_eq!(rank(&m, 1e-9), 3);
    }

    #[test]
    fn null_space_cases() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let n = null_space_basis(&m, 1e-9);
        assert_eq!(n.cols(), 1);
        assert!((n[(1, 0)].abs() - 1.0).abs() < 1e-14 && n[(0, 0)].abs() < 1e-14);

        let full = random_matrix(4, 4, 3);
        assert_eq!(null_space_basis(&full, 1e-9).cols(), 0);

        let row = DenseMatrix::row_vector(&[1.0, 1.0, 1.0]);
        let b = null_space_basis(&row, 1e-9);
        assert_eq!(b.cols(), 2);
        assert!(row.matmul(&b).max_abs() < 1e-14);
        assert_orthonormal_columns(&b, 1e-14);
    }

    #[test]
    fn pseudo_inverse_cases() {
        let i3 = DenseMatrix::identity(3);
        assert!(pseudo_inverse(&i3, 1e-9).sub(&i3).max_abs() < 1e-15);
        let d = DenseMatrix::from_diag(&[2.0, 0.0]);
        let p = pseudo_inverse(&d, 1e-9);
        assert!(p.sub(&DenseMatrix::from_diag(&[0.5, 0.0])).max_abs() < 1e-15);

        let l = random_matrix(3, 5, 9);
        let lp = pseudo_inverse(&l, 1e-9);
        assert!(l.matmul(&lp).sub(&DenseMatrix::identity(3)).max_abs() < 1e-9);
    }

    #[test]
    fn moore_penrose_identities_rank_deficient() {
        let a = random_matrix(5, 2, 21);
        let b = random_matrix(2, 6, 22);
        let l = a.matmul(&b);
        let lp = pseudo_inverse(&l, 1e-9);
        let tol = 1e-9 * svd(&l).max_singular_value();
        assert!(l.matmul(&lp).matmul(&l).sub(&l).max_abs() < tol);
        assert!(lp.matmul(&l).matmul(&lp).sub(&lp).max_abs() < 1e-9 * lp.frobenius_norm());
        let llp = l.matmul(&lp);
        assert!(llp.sub(&llp.transpose()).max_abs() < 1e-9);
        let lpl = lp.matmul(&l);
        assert!(lpl.sub(&lpl.transpose()).max_abs() < 1e-9);
    }

    #[test]
    fn lstsq_cases() {
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(lstsq(&DenseMatrix::identity(3), &b).unwrap(), b);
        let col = DenseMatrix::column_vector(&[1.0, 1.0]);
        let x = lstsq(&col, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);

        let a = random_matrix(9, 4, 5);
        let rhs: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let x = lstsq(&a, &rhs).unwrap();
        let r = sub(&a.matvec(&x), &rhs);
        let g = a.tr_matvec(&r);
        assert!(norm_inf(&g) < 1e-9);
        assert!(lstsq(&a, &[1.0]).is_err());
    }

    #[test]
    fn solve_square_matches_inverse() {
        let a = random_matrix(6, 6, 77);
        let x0: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let b = a.matvec(&x0);
        let x = solve_square(&a, &b).unwrap();
        assert!(norm_inf(&sub(&x, &x0)) < 1e-11);
        assert!(solve_square(&DenseMatrix::zeros(2, 2), &[1.0, 1.0]).is_none());
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let a = random_matrix(7, 7, 31);
        let s = a.add(&a.transpose());
        let e = symmetric_eigen(&s);
        assert_orthonormal_columns(&e.vectors, 1e-12);
        let rec = DenseMatrix::from_fn(7, 7, |i, j| {
            (0..7).map(|k| e.vectors[(i, k)] * e.values[k] * e.vectors[(j, k)]).sum()
        });
        assert!(rec.sub(&s).max_abs() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn op_norm_cases() {
        let est = op_norm_estimate(|x| x.iter().map(|v| 2.0 * v).collect(), |x| x.iter().map(|v| 2.0 * v).collect(), 5, 10, 0);
        assert!((est - 2.0).abs() < 1e-6);
        let zero = op_norm_estimate(|x| vec![0.0; x.len()], |x| vec![0.0; x.len()], 4, 10, 0);
        assert_eq!(zero, 0.0);
        assert_eq!(op_norm_estimate(|x| x.to_vec(), |x| x.to_vec(), 0, 10, 0), 0.0);

        let m = DenseMatrix::from_diag(&[5.0, 1.0, 0.5, 3.0, 0.1, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = svd(&DenseMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0))).u;
        let m = q.matmul(&m).matmul(&q.transpose());
        let smax = svd(&m).max_singular_value();
        let est = op_norm_estimate(|x| m.matvec(x), |x| m.tr_matvec(x), 6, 100, 7);
        assert!((est - smax).abs() < 1e-4, "{est} vs {smax}");
        assert!(est <= smax * (1.0 + 1e-3));
        let again = op_norm_estimate(|x| m.matvec(x), |x| m.tr_matvec(x), 6, 100, 7);
        assert_eq!(est.to_bits(), again.to_bits());
    }
}
