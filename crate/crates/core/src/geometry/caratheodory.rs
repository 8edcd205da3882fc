use super::AtomicDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{self, norm2, null_space_basis, sub, DenseMatrix, DEFAULT_RANK_TOL};
use crate::lp;

const MEMBERSHIP_TOL: f64 = 1e-8;

/// Rewrites `p ∈ conv(vertices)` as a convex combination of at most
/// `dim + 1` affinely independent input vertices.
///
/// Starting weights come from `initial_weights` or, when absent, from a
/// phase-one LP. Affine dependencies among the support are eliminated one at
/// a time; when several weights reach zero together the lowest index goes.
pub fn caratheodory_reduce(
    p: &[f64],
    vertices: &[Vec<f64>],
    initial_weights: Option<&[f64]>,
) -> Result<AtomicDecomposition> {
    let dim = p.len();
    if vertices.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch("vertex dimension differs from the point".into()));
    }
    let tol = MEMBERSHIP_TOL * (1.0 + norm2(p));
    if vertices.is_empty() {
        return Err(Error::InfeasiblePoint { residual: norm2(p) });
    }
    let lifted: Vec<Vec<f64>> = vertices.iter().map(|v| lift(v, 1.0)).collect();
    let target = lift(p, 1.0);

    let weights = match initial_weights {
        Some(w) => {
            if w.len() != vertices.len() {
                return Err(Error::DimensionMismatch("one weight per vertex expected".into()));
            }
            if w.iter().any(|&x| x < -1e-12) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput("initial weights are not convex weights".into()));
            }
            let w: Vec<f64> = w.iter().map(|&x| x.max(0.0)).collect();
            let residual = combination_residual(&lifted, &w, &target);
            if residual > tol {
                return Err(Error::InfeasiblePoint { residual });
            }
            w
        }
        None => feasible_weights(&lifted, &target)?,
    };

    let (support, w) = eliminate_dependencies(&lifted, weights);
    let w = polish(&lifted, &support, w, &target);
    let residual = combination_residual_on(&lifted, &support, &w, &target);
    if residual > tol {
        return Err(Error::InfeasiblePoint { residual });
    }
    let total: f64 = w.iter().sum();
    Ok(AtomicDecomposition {
        point_atoms: support.iter().zip(&w).map(|(&i, &wi)| (vertices[i].clone(), wi / total)).collect(),
        ray_atoms: Vec::new(),
        lineality_component: vec![0.0; dim],
    })
}

/// Klee's extension: `p ∈ conv(vertices) + cone(rays)` decomposed with at
/// most `dim + 1` generators in total.
///
/// Vertices are lifted to height one and rays to height zero, then a conic
/// Carathéodory reduction runs in dimension `dim + 1`. The result has either
/// at most `dim + 1` point atoms and no rays, or, when rays are used, at most
/// `dim` points in the merged form counted by
/// [`AtomicDecomposition::mixed_count`].
pub fn klee_reduce(p: &[f64], vertices: &[Vec<f64>], rays: &[Vec<f64>]) -> Result<AtomicDecomposition> {
    let dim = p.len();
    if vertices.iter().chain(rays).any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch("generator dimension differs from the point".into()));
    }
    if vertices.is_empty() {
        return Err(Error::InfeasiblePoint { residual: f64::INFINITY });
    }
    let tol = MEMBERSHIP_TOL * (1.0 + norm2(p));
    let nv = vertices.len();
    let lifted: Vec<Vec<f64>> =
        vertices.iter().map(|v| lift(v, 1.0)).chain(rays.iter().map(|r| lift(r, 0.0))).collect();
    let target = lift(p, 1.0);
    let weights = feasible_weights(&lifted, &target)?;
    let (support, w) = eliminate_dependencies(&lifted, weights);
    let w = polish(&lifted, &support, w, &target);
    let residual = combination_residual_on(&lifted, &support, &w, &target);
    if residual > tol {
        return Err(Error::InfeasiblePoint { residual });
    }
    let point_total: f64 = support.iter().zip(&w).filter(|(&i, _)| i < nv).map(|(_, wi)| wi).sum();
    let mut out = AtomicDecomposition::empty(dim);
    for (&i, &wi) in support.iter().zip(&w) {
        if i < nv {
            out.point_atoms.push((vertices[i].clone(), wi / point_total));
        } else {
            out.ray_atoms.push((rays[i - nv].clone(), wi));
        }
    }
    Ok(out)
}

fn lift(v: &[f64], h: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    out.push(h);
    out
}

fn feasible_weights(generators: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let a = DenseMatrix::from_columns(generators, target.len());
    match lp::phase_one(&a, target)? {
        Some((x, _)) => Ok(x.into_iter().map(|v| v.max(0.0)).collect()),
        None => {
            let ls = linalg::lstsq(&a, target)?;
            Err(Error::InfeasiblePoint { residual: norm2(&sub(&a.matvec(&ls), target)).max(MEMBERSHIP_TOL) })
        }
    }
}

/// Removes linear dependencies among the supporting generators while keeping
/// `Σ wᵢ gᵢ` fixed and `w ≥ 0`. Returns the surviving indices and weights.
fn eliminate_dependencies(generators: &[Vec<f64>], weights: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
    let rows = generators.first().map_or(0, Vec::len);
    let mut support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut w: Vec<f64> = support.iter().map(|&i| weights[i]).collect();
    while support.len() > 1 {
        let cols: Vec<Vec<f64>> = support.iter().map(|&i| generators[i].clone()).collect();
        let g = DenseMatrix::from_columns(&cols, rows);
        let null = null_space_basis(&g, DEFAULT_RANK_TOL);
        if null.cols() == 0 {
            break;
        }
        let mut alpha = null.column(0);
        let amax = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if !alpha.iter().any(|&a| a > 1e-12 * amax) {
            alpha.iter_mut().for_each(|a| *a = -*a);
        }
        let mut step = f64::INFINITY;
        let mut drop = usize::MAX;
        for (k, (&a, &wk)) in alpha.iter().zip(&w).enumerate() {
            if a <= 1e-12 * amax {
                continue;
            }
            let t = wk / a;
            // strict improvement wins; near-ties keep the lowest original index
            if drop == usize::MAX {
                step = t;
                drop = k;
                continue;
            }
            let tie = (t - step).abs() <= 1e-12 * step.abs().max(1e-300);
            if t < step && !tie || tie && support[k] < support[drop] {
                step = t;
                drop = k;
            }
        }
        for (wk, a) in w.iter_mut().zip(&alpha) {
            *wk -= step * a;
        }
        w[drop] = 0.0;
        let keep: Vec<usize> = (0..support.len()).filter(|&k| w[k] > 0.0).collect();
        support = keep.iter().map(|&k| support[k]).collect();
        w = keep.iter().map(|&k| w[k]).collect();
    }
    (support, w)
}

/// Re-solves the weights on an independent support; keeps the old weights
/// if the refit would go negative or is no better.
fn polish(generators: &[Vec<f64>], support: &[usize], w: Vec<f64>, target: &[f64]) -> Vec<f64> {
    if support.is_empty() {
        return w;
    }
    let cols: Vec<Vec<f64>> = support.iter().map(|&i| generators[i].clone()).collect();
    let g = DenseMatrix::from_columns(&cols, target.len());
    let Ok(refit) = linalg::lstsq(&g, target) else { return w };
    if refit.iter().any(|&v| v < 0.0) {
        return w;
    }
    let before = combination_residual_on(generators, support, &w, target);
    let after = combination_residual_on(generators, support, &refit, target);
    if after <= before {
        refit
    } else {
        w
    }
}

fn combination_residual(generators: &[Vec<f64>], w: &[f64], target: &[f64]) -> f64 {
    let idx: Vec<usize> = (0..w.len()).collect();
    combination_residual_on(generators, &idx, w, target)
}

fn combination_residual_on(generators: &[Vec<f64>], support: &[usize], w: &[f64], target: &[f64]) -> f64 {
    let mut acc = vec![0.0; target.len()];
    for (&i, &wi) in support.iter().zip(w) {
        linalg::axpy(wi, &generators[i], &mut acc);
    }
    norm2(&sub(&acc, target))
}
