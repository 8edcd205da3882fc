use super::{caratheodory_reduce, AtomicDecomposition};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Birkhoff-von Neumann decomposition of a doubly stochastic matrix into
/// permutation matrices (flattened row-major).
///
/// Greedy: find a perfect matching on entries above `tol`, subtract the
/// smallest matched entry, repeat. If the greedy pass produced more than
/// `(n-1)² + 1` permutations the weights are pushed through Carathéodory
/// reduction, which always gets under that count since permutation matrices
/// span an affine space of dimension `(n-1)²`.
pub fn birkhoff_decompose(m: &DenseMatrix, tol: f64) -> Result<AtomicDecomposition> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::NotDoublyStochastic(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if !m.is_finite() {
        return Err(Error::NotDoublyStochastic("non-finite entry".into()));
    }
    if let Some(v) = m.as_slice().iter().find(|&&v| v < -tol) {
        return Err(Error::NotDoublyStochastic(format!("negative entry {v}")));
    }
    for i in 0..n {
        let rs: f64 = m.row(i).iter().sum();
        let cs: f64 = (0..n).map(|k| m[(k, i)]).sum();
        if (rs - 1.0).abs() > tol || (cs - 1.0).abs() > tol {
            return Err(Error::NotDoublyStochastic(format!("row/column {i} sums to {rs}/{cs}")));
        }
    }
    if n == 0 {
        return Ok(AtomicDecomposition::empty(0));
    }

    let mut residual = m.clone();
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut weights = Vec::new();
    // each round zeroes at least one entry
    for _ in 0..n * n {
        if residual.max_abs() <= tol {
            break;
        }
        let Some(perm) = perfect_matching(&residual, tol) else { break };
        let theta = perm.iter().enumerate().map(|(i, &j)| residual[(i, j)]).fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            residual[(i, j)] -= theta;
        }
        // the minimizing entry is exactly zero now
        if let Some((i, &j)) =
            perm.iter().enumerate().find(|(i, &j)| residual[(*i, j)].abs() <= f64::EPSILON * theta.max(1.0))
        {
            residual[(i, j)] = 0.0;
        }
        perms.push(perm);
        weights.push(theta);
    }

    let total: f64 = weights.iter().sum();
    let atoms: Vec<Vec<f64>> = perms.iter().map(|p| permutation_matrix(p)).collect();
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let limit = (n - 1) * (n - 1) + 1;
    if atoms.len() > limit {
        let target = m.as_slice().iter().map(|v| v / total).collect::<Vec<_>>();
        let mut dec = caratheodory_reduce(&target, &atoms, Some(&normalized))?;
        for (_, w) in dec.point_atoms.iter_mut() {
            *w *= total;
        }
        renormalize(&mut dec);
        return Ok(dec);
    }
    let mut dec = AtomicDecomposition {
        point_atoms: atoms.into_iter().zip(weights).collect(),
        ray_atoms: Vec::new(),
        lineality_component: vec![0.0; n * n],
    };
    renormalize(&mut dec);
    Ok(dec)
}

/// Rescales weights to sum to one. Input row sums are one only within `tol`,
/// so the raw greedy weights can drift from one by the same amount.
fn renormalize(dec: &mut AtomicDecomposition) {
    let s = dec.weight_sum();
    if s > 0.0 && (s - 1.0).abs() > 1e-15 {
        for (_, w) in dec.point_atoms.iter_mut() {
            *w /= s;
        }
    }
}

fn permutation_matrix(perm: &[usize]) -> Vec<f64> {
    let n = perm.len();
    let mut out = vec![0.0; n * n];
    for (i, &j) in perm.iter().enumerate() {
        out[i * n + j] = 1.0;
    }
    out
}

/// Recovers `σ` from a flattened 0/1 permutation matrix (`σ(i)` = column of
/// the one in row `i`); `None` if the input is not a permutation matrix.
pub fn permutation_of(flat: &[f64], n: usize) -> Option<Vec<usize>> {
    if flat.len() != n * n {
        return None;
    }
    let mut perm = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for i in 0..n {
        let row = &flat[i * n..(i + 1) * n];
        if row.iter().any(|&v| v != 0.0 && v != 1.0) {
            return None;
        }
        let ones: Vec<usize> = (0..n).filter(|&j| row[j] == 1.0).collect();
        if ones.len() != 1 || seen[ones[0]] {
            return None;
        }
        seen[ones[0]] = true;
        perm.push(ones[0]);
    }
    Some(perm)
}

/// Kuhn's augmenting-path matching on the bipartite graph of entries `> tol`.
/// Returns `perm[row] = col`.
fn perfect_matching(m: &DenseMatrix, tol: f64) -> Option<Vec<usize>> {
    let n = m.rows();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| m[(i, j)] > tol).collect()).collect();
    let mut col_match: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut visited = vec![false; n];
        if !augment(row, &adj, &mut visited, &mut col_match) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (j, r) in col_match.iter().enumerate() {
        perm[r.expect("perfect matching covers all columns")] = j;
    }
    Some(perm)
}

fn augment(row: usize, adj: &[Vec<usize>], visited: &mut [bool], col_match: &mut [Option<usize>]) -> bool {
    for &j in &adj[row] {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        if col_match[j].map_or(true, |r| augment(r, adj, visited, col_match)) {
            col_match[j] = Some(row);
            return true;
        }
    }
    false
}
