//! Reference computations for the integration tests. They stay away from the
//! crate's own linear algebra so they can be used to check it.
#![allow(dead_code)]

use std::collections::VecDeque;

use nalgebra::DMatrix;
use repkit_core::tv2d::Image2D;
use repkit_core::DenseMatrix;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Singular values, largest first.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol` times the largest.
pub fn rank(m: &DenseMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let a = to_na(m);
    let sym = (&a + a.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn stack(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let mut rows = top.to_rows();
    rows.extend(bottom.to_rows());
    DenseMatrix::from_rows(&rows).unwrap()
}

/// Gaussian elimination with partial pivoting on a square system. `None`
/// when a pivot falls below `1e-11` times the largest entry.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-11 * scale {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Least squares through the normal equations; `None` if the columns are
/// numerically dependent. Returns the solution and the residual norm.
pub fn least_squares(cols: &[Vec<f64>], target: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = cols.len();
    let gram: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum()).collect()).collect();
    let rhs: Vec<f64> = cols.iter().map(|c| c.iter().zip(target).map(|(a, b)| a * b).sum()).collect();
    let x = gauss_solve(gram, rhs)?;
    let mut r = target.to_vec();
    for (c, xi) in cols.iter().zip(&x) {
        for (ri, ci) in r.iter_mut().zip(c) {
            *ri -= xi * ci;
        }
    }
    Some((x, r.iter().map(|v| v * v).sum::<f64>().sqrt()))
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Connected components of the pixels where `mask` holds.
pub fn components(width: usize, height: usize, mask: &[bool], eight: bool) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let (c, r) = ((p % width) as i64, (p / width) as i64);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nc, nr) = (c + dc, r + dr);
                    if nc < 0 || nr < 0 || nc >= width as i64 || nr >= height as i64 {
                        continue;
                    }
                    let q = nr as usize * width + nc as usize;
                    if mask[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    count
}

/// `{u ≥ t}` is one 4-connected piece and its complement is 8-connected.
pub fn superlevel_is_simple(u: &Image2D, t: f64) -> bool {
    let inside: Vec<bool> = u.values.iter().map(|&v| v >= t).collect();
    let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
    components(u.width, u.height, &inside, false) == 1 && components(u.width, u.height, &outside, true) <= 1
}

/// Isotropic forward-difference TV with Neumann boundary.
pub fn reference_tv(u: &Image2D) -> f64 {
    let (w, h) = (u.width, u.height);
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            let v = u.values[r * w + c];
            let dx = if c + 1 < w { u.values[r * w + c + 1] - v } else { 0.0 };
            let dy = if r + 1 < h { u.values[(r + 1) * w + c] - v } else { 0.0 };
            total += (dx * dx + dy * dy).sqrt();
        }
    }
    total
}
