use serde::{Deserialize, Serialize};

use super::HPolyhedron;
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, null_space_basis, DenseMatrix, DEFAULT_RANK_TOL};

/// Smallest face of a polyhedron containing a point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceReport {
    pub dimension: usize,
    pub active_inequalities: Vec<usize>,
}

/// Active set and dimension of the minimal face `F_p(P)`.
///
/// Constraint `i` is active when `aᵢᵀp ≥ bᵢ − tol·scale` with
/// `scale = max(1, ‖p‖∞, ‖b‖∞)`. Since `p` satisfies the inactive rows
/// strictly, the face is the polyhedron cut by the active rows made tight and
/// its dimension is the null-space dimension of those rows stacked with the
/// equalities.
pub fn minimal_face(p: &[f64], poly: &HPolyhedron, tol: f64) -> Result<FaceReport> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = poly.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch(format!("point of length {} in a {n}-dimensional polyhedron", p.len())));
    }
    let scale = 1f64.max(norm_inf(p)).max(norm_inf(&poly.b_ineq)).max(norm_inf(&poly.b_eq));
    let slack_tol = tol * scale;

    let mut active = Vec::new();
    for i in 0..poly.a_ineq.rows() {
        let lhs: f64 = poly.a_ineq.row(i).iter().zip(p).map(|(a, x)| a * x).sum();
        let excess = lhs - poly.b_ineq[i];
        if excess > slack_tol {
            return Err(Error::InfeasiblePoint { residual: excess });
        }
        if excess >= -slack_tol {
            active.push(i);
        }
    }
    for i in 0..poly.a_eq.rows() {
        let lhs: f64 = poly.a_eq.row(i).iter().zip(p).map(|(a, x)| a * x).sum();
        let gap = (lhs - poly.b_eq[i]).abs();
        if gap > slack_tol {
            return Err(Error::InfeasiblePoint { residual: gap });
        }
    }

    let tight = poly.a_ineq.select_rows(&active);
    let stacked = if poly.a_eq.rows() > 0 { tight.vstack(&poly.a_eq) } else { tight };
    let dimension = if stacked.rows() == 0 {
        n
    } else {
        null_space_basis(&normalize_rows(&stacked), DEFAULT_RANK_TOL).cols()
    };
    Ok(FaceReport { dimension, active_inequalities: active })
}

/// `true` iff the minimal face of `p` is zero-dimensional.
pub fn is_extreme_point(p: &[f64], poly: &HPolyhedron, tol: f64) -> Result<bool> {
    Ok(minimal_face(p, poly, tol)?.dimension == 0)
}

fn normalize_rows(m: &DenseMatrix) -> DenseMatrix {
    let norms: Vec<f64> = (0..m.rows()).map(|i| crate::linalg::norm2(m.row(i))).collect();
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| if norms[i] > 0.0 { m[(i, j)] / norms[i] } else { 0.0 })
}
