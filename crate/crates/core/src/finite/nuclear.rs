use serde::{Deserialize, Serialize};

use super::{MatrixProblem, SplittingConfig};
use crate::error::{Error, Result};
use crate::geometry::AtomicDecomposition;
use crate::linalg::{self, norm_inf, pseudo_inverse, rank_from_singular_values, svd, DenseMatrix, DEFAULT_RANK_TOL};

/// Relative threshold used when reporting the rank of a nuclear-norm solution.
pub const NUCLEAR_RANK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NuclearSolution {
    pub matrix: DenseMatrix,
    pub rank: usize,
    pub nuclear_norm: f64,
    pub constraint_residual: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

fn nuclear_norm(m: &DenseMatrix) -> f64 {
    svd(m).singular_values.iter().sum()
}

/// Prox of `γ‖·‖_*`: soft-threshold the singular values.
fn singular_value_threshold(z: &DenseMatrix, gamma: f64) -> DenseMatrix {
    let dec = svd(z);
    let (p, n) = z.shape();
    let mut out = DenseMatrix::zeros(p, n);
    for (k, &s) in dec.singular_values.iter().enumerate() {
        let t = s - gamma;
        if t <= 0.0 {
            continue;
        }
        for i in 0..p {
            let ui = dec.u[(i, k)] * t;
            for j in 0..n {
                out[(i, j)] += ui * dec.v[(j, k)];
            }
        }
    }
    out
}

struct AffineProjector<'a> {
    prob: &'a MatrixProblem,
    a: DenseMatrix,
    apinv: DenseMatrix,
}

impl<'a> AffineProjector<'a> {
    fn new(prob: &'a MatrixProblem) -> Self {
        let a = prob.flattened();
        let apinv = pseudo_inverse(&a, DEFAULT_RANK_TOL);
        Self { prob, a, apinv }
    }

    fn project(&self, x: &DenseMatrix) -> DenseMatrix {
        let r = linalg::sub(&self.a.matvec(x.as_slice()), &self.prob.y);
        let corr = self.apinv.matvec(&r);
        let data: Vec<f64> = x.as_slice().iter().zip(&corr).map(|(v, c)| v - c).collect();
        DenseMatrix::from_row_major(x.rows(), x.cols(), data).expect("shape preserved")
    }

    /// Feasible matrix with the row and column spaces of `x`, as close to `x`
    /// as the constraints allow; `None` if those spaces cannot fit the data.
    fn purify(&self, x: &DenseMatrix, eps: f64) -> Option<DenseMatrix> {
        let dec = svd(x);
        let r = rank_from_singular_values(&dec.singular_values, 1e-9);
        if r == 0 {
            return (norm_inf(&self.prob.y) <= eps).then(|| DenseMatrix::zeros(x.rows(), x.cols()));
        }
        let idx: Vec<usize> = (0..r).collect();
        let u = dec.u.select_columns(&idx);
        let v = dec.v.select_columns(&idx);
        let b = DenseMatrix::from_fn(self.prob.m(), r * r, |i, k| {
            let s = u.transpose().matmul(&self.prob.measurement_maps[i]).matmul(&v);
            s.as_slice()[k]
        });
        let core0: Vec<f64> = (0..r * r).map(|k| if k / r == k % r { dec.singular_values[k / r] } else { 0.0 }).collect();
        let resid = linalg::sub(&self.prob.y, &b.matvec(&core0));
        let dc = linalg::lstsq(&b, &resid).ok()?;
        let core: Vec<f64> = core0.iter().zip(&dc).map(|(a, d)| a + d).collect();
        let core = DenseMatrix::from_row_major(r, r, core).ok()?;
        let m = u.matmul(&core).matmul(&v.transpose());
        (self.prob.residual(&m) <= eps).then_some(m)
    }

    /// Lower bound on the optimal value from a subgradient estimate `g`.
    fn dual_value(&self, g: &DenseMatrix) -> f64 {
        // ν with Aᵀν ≈ g, rescaled into the dual-feasible set ‖Aᵀν‖_op ≤ 1
        let nu = self.apinv.tr_matvec(g.as_slice());
        let h = self.prob.adjoint(&nu);
        let s = svd(&h).max_singular_value();
        let scale = if s > 1.0 { 1.0 / s } else { 1.0 };
        scale * linalg::dot(&nu, &self.prob.y)
    }
}

/// `min ‖M‖_* s.t. ⟨Aᵢ, M⟩ = yᵢ` by Douglas-Rachford splitting.
///
/// Iterates `x = prox_{γ‖·‖_*}(z)`, `w = P_aff(2x − z)`, `z += λ(w − x)`.
/// Every few iterations the low-rank iterate `x` is made exactly feasible
/// inside its own row/column spaces and compared against the dual bound
/// obtained from `(z − x)/γ`.
pub fn nuclear_min_solve(prob: &MatrixProblem, cfg: &SplittingConfig) -> Result<NuclearSolution> {
    let (p, n) = prob.shape;
    let proj = AffineProjector::new(prob);
    let zero = DenseMatrix::zeros(p, n);
    let ls = proj.project(&zero);
    let ls_resid = prob.residual(&ls);
    if ls_resid > 1e-6 {
        return Err(Error::Infeasible(format!("least-squares residual {ls_resid:.3e}")));
    }
    if norm_inf(&prob.y) == 0.0 {
        return Ok(NuclearSolution {
            matrix: zero,
            rank: 0,
            nuclear_norm: 0.0,
            constraint_residual: 0.0,
            relative_gap: 0.0,
            iterations: 0,
        });
    }

    let gamma = cfg.gamma;
    let lambda = cfg.relaxation;
    let mut z = ls;
    let mut best_gap = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        let x = singular_value_threshold(&z, gamma);
        let w = proj.project(&x.scale(2.0).sub(&z));
        z = z.add(&w.sub(&x).scale(lambda));

        if it % 10 != 0 && it != cfg.max_iters {
            continue;
        }
        let Some(m) = proj.purify(&x, cfg.eps_feas) else { continue };
        let primal = nuclear_norm(&m);
        let g = z.sub(&x).scale(1.0 / gamma);
        let dual = proj.dual_value(&g);
        let gap = (primal - dual).max(0.0) / primal.max(1.0);
        best_gap = best_gap.min(gap);
        if gap <= cfg.eps_gap {
            let s = svd(&m).singular_values;
            return Ok(NuclearSolution {
                rank: rank_from_singular_values(&s, NUCLEAR_RANK_TOL),
                nuclear_norm: s.iter().sum(),
                constraint_residual: prob.residual(&m),
                relative_gap: gap,
                matrix: m,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "nuclear-norm Douglas-Rachford",
        iterations: cfg.max_iters,
        detail: format!("best relative gap {best_gap:.3e}"),
    })
}

/// Writes `M` as a convex combination of nuclear-ball extreme points scaled
/// by `‖M‖_*`: atoms `‖M‖_*·uᵢvᵢᵀ` (flattened row-major) with weights
/// `σᵢ/‖M‖_*`.
pub fn rank1_atomic_decomposition(m: &DenseMatrix, tol: f64) -> AtomicDecomposition {
    let (p, n) = m.shape();
    let dec = svd(m);
    let r = rank_from_singular_values(&dec.singular_values, tol);
    let mut out = AtomicDecomposition::empty(p * n);
    if r == 0 {
        return out;
    }
    let total: f64 = dec.singular_values[..r].iter().sum();
    for k in 0..r {
        let atom: Vec<f64> = (0..p * n).map(|idx| total * dec.u[(idx / n, k)] * dec.v[(idx % n, k)]).collect();
        out.point_atoms.push((atom, dec.singular_values[k] / total));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(p: usize, n: usize, i: usize, j: usize) -> DenseMatrix {
        DenseMatrix::from_fn(p, n, |a, b| if a == i && b == j { 1.0 } else { 0.0 })
    }

    #[test]
    fn aligned_atom() {
        let prob = MatrixProblem::new(vec![unit(3, 3, 0, 0)], vec![1.0], (3, 3)).unwrap();
        let sol = nuclear_min_solve(&prob, &SplittingConfig::default()).unwrap();
        assert!(sol.matrix.sub(&unit(3, 3, 0, 0)).max_abs() < 1e-6, "{:?}", sol.matrix);
        assert_eq!(sol.rank, 1);
        assert!((sol.nuclear_norm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_data() {
        let prob = MatrixProblem::new(vec![unit(2, 2, 0, 1), unit(2, 2, 1, 1)], vec![0.0, 0.0], (2, 2)).unwrap();
        let sol = nuclear_min_solve(&prob, &SplittingConfig::default()).unwrap();
        assert_eq!(sol.matrix.max_abs(), 0.0);
    }

    #[test]
    fn infeasible_system() {
        let a = unit(2, 2, 0, 0);
        let prob = MatrixProblem::new(vec![a.clone(), a], vec![1.0, 2.0], (2, 2)).unwrap();
        assert!(matches!(nuclear_min_solve(&prob, &SplittingConfig::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn rank_one_atoms() {
        let e12 = unit(2, 2, 0, 1);
        let dec = rank1_atomic_decomposition(&e12, 1e-9);
        assert_eq!(dec.point_atoms.len(), 1);
        assert!((dec.point_atoms[0].1 - 1.0).abs() < 1e-15);
        assert!(dec.reconstruction_error(e12.as_slice()) < 1e-15);

        let d = DenseMatrix::from_diag(&[3.0, 1.0]);
        let dec = rank1_atomic_decomposition(&d, 1e-9);
        assert_eq!(dec.point_atoms.len(), 2);
        assert!((dec.point_atoms[0].1 - 0.75).abs() < 1e-15);
        assert!((dec.point_atoms[1].1 - 0.25).abs() < 1e-15);
        for (a, _) in &dec.point_atoms {
            let am = DenseMatrix::from_row_major(2, 2, a.clone()).unwrap();
            assert!((nuclear_norm(&am) - 4.0).abs() < 1e-12);
        }
        assert!(rank1_atomic_decomposition(&DenseMatrix::zeros(3, 2), 1e-9).point_atoms.is_empty());
    }
}
