use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm2, norm_inf, null_space_basis, pseudo_inverse, rank, DenseMatrix, DEFAULT_RANK_TOL};
use crate::lp::{self, LpStatus};

/// Structure of an ℓ¹-analysis solution `u = Σ_{i∈I} αᵢ L⁺eᵢ + u_K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// `I = supp(Lu)`.
    pub support: Vec<usize>,
    /// `αᵢ = (Lu)ᵢ` for `i ∈ I`.
    pub alphas: Vec<f64>,
    /// `u_K = u − L⁺Lu ∈ ker L`.
    pub kernel_part: Vec<f64>,
    /// `dim Φ(ker L)`.
    pub dim_phi_kernel: usize,
    /// `m − dim Φ(ker L)`.
    pub support_bound: usize,
    /// `‖Lu‖₁`.
    pub objective: f64,
}

/// `min ‖Lu‖₁ s.t. Φu = y` for surjective `L`.
///
/// With `u = L⁺z + N w` (`N` a basis of `ker L`) the free part `w` is
/// eliminated by projecting the constraints onto `(Φ ker L)^⊥`. The remaining
/// LP in `z = z⁺ − z⁻` has `m − dim Φ(ker L)` rows, so its basic solution has
/// at most that many nonzeros; `w` is then recovered by least squares.
pub fn l1_analysis_solve(phi: &DenseMatrix, y: &[f64], l: &DenseMatrix) -> Result<(Vec<f64>, AnalysisReport)> {
    let (m, n) = phi.shape();
    let p = l.rows();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!("Phi has {m} rows but y has {} entries", y.len())));
    }
    if l.cols() != n {
        return Err(Error::DimensionMismatch(format!("L has {} columns, Phi has {n}", l.cols())));
    }
    let r = rank(l, DEFAULT_RANK_TOL);
    if r < p {
        return Err(Error::NotSurjective { rank: r, rows: p });
    }
    let lpinv = pseudo_inverse(l, DEFAULT_RANK_TOL);
    let kernel = null_space_basis(l, DEFAULT_RANK_TOL);
    let phi_lpinv = phi.matmul(&lpinv);
    let phi_kernel = phi.matmul(&kernel);
    let d = if kernel.cols() == 0 { 0 } else { rank(&phi_kernel, DEFAULT_RANK_TOL) };

    // orthonormal basis of (range ΦN)^⊥
    let q = if kernel.cols() == 0 || d == 0 {
        DenseMatrix::identity(m)
    } else {
        null_space_basis(&phi_kernel.transpose(), DEFAULT_RANK_TOL)
    };
    let a_red = q.transpose().matmul(&phi_lpinv);
    let b_red = q.tr_matvec(y);
    let a_split = a_red.hstack(&a_red.scale(-1.0));
    let out = lp::simplex(&vec![1.0; 2 * p], &a_split, &b_red)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("no u satisfies Phi u = y".into())),
        LpStatus::Unbounded => unreachable!("an l1 objective is bounded below"),
    }
    let z: Vec<f64> = (0..p).map(|i| out.x[i] - out.x[p + i]).collect();

    let rest = linalg::sub(y, &phi_lpinv.matvec(&z));
    let w = if kernel.cols() == 0 { Vec::new() } else { linalg::lstsq(&phi_kernel, &rest)? };
    let mut u = lpinv.matvec(&z);
    let kernel_part = if kernel.cols() == 0 { vec![0.0; n] } else { kernel.matvec(&w) };
    linalg::axpy(1.0, &kernel_part, &mut u);

    let residual = norm2(&linalg::sub(&phi.matvec(&u), y));
    if residual > 1e-8 * (1.0 + norm2(y)) {
        return Err(Error::Infeasible(format!("constraint residual {residual:.3e} after reconstruction")));
    }

    let lu = l.matvec(&u);
    let thresh = 1e-9 * (1.0 + norm_inf(&lu));
    let support: Vec<usize> = (0..p).filter(|&i| lu[i].abs() > thresh).collect();
    let alphas = support.iter().map(|&i| lu[i]).collect();
    let report = AnalysisReport {
        support,
        alphas,
        kernel_part,
        dim_phi_kernel: d,
        support_bound: m.saturating_sub(d),
        objective: linalg::norm1(&lu),
    };
    Ok((u, report))
}
