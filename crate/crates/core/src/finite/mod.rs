//! Finite-dimensional solvers: linear programs, nonnegative least squares,
//! ℓ¹-analysis, nuclear-norm and positive-semidefinite problems.

mod analysis;
mod nnls;
mod nuclear;
mod psd;

pub use analysis::{l1_analysis_solve, AnalysisReport};
pub use nnls::nnls_solve;
pub use nuclear::{nuclear_min_solve, rank1_atomic_decomposition, NuclearSolution};
pub use psd::{barvinok_bound, psd_solve, rank_reduce_psd, rank_reduce_psd_with_cost, PsdSolution, PSD_RANK_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, sub, DenseMatrix};
pub use crate::lp::LpStatus;
use crate::lp;

/// `min cᵀx s.t. A x = b, x ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
}

impl LpProblem {
    pub fn new(c: Vec<f64>, a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if c.len() != a.cols() || b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "c: {}, A: {}x{}, b: {}",
                c.len(),
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        if c.iter().chain(&b).any(|v| !v.is_finite()) || !a.is_finite() {
            return Err(Error::InvalidInput("non-finite LP data".into()));
        }
        Ok(Self { c, a, b })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub basis: Vec<usize>,
    pub objective: f64,
    pub status: LpStatus,
    /// Simplex multipliers of the equality rows (optimal status only).
    pub duals: Vec<f64>,
    /// Certified descent ray (unbounded status only).
    pub ray: Option<Vec<f64>>,
}

impl LpSolution {
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.x[i].abs() > threshold).collect()
    }
}

/// Two-phase Bland-rule simplex returning a basic solution.
pub fn simplex_solve(prob: &LpProblem) -> Result<LpSolution> {
    let out = lp::simplex(&prob.c, &prob.a, &prob.b)?;
    let mut x = out.x;
    if out.status == LpStatus::Optimal {
        // basic values within rounding of zero are reported as zero
        let scale = 1e-13 * (1.0 + norm_inf(&x));
        x.iter_mut().filter(|v| v.abs() <= scale).for_each(|v| *v = 0.0);
        debug_assert!(norm2(&sub(&prob.a.matvec(&x), &prob.b)) <= 1e-8 * (1.0 + norm2(&prob.b)));
    }
    Ok(LpSolution { x, basis: out.basis, objective: out.objective, status: out.status, duals: out.duals, ray: out.ray })
}

/// Linear measurements `⟨Aᵢ, M⟩ = yᵢ` of a `p x n` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixProblem {
    pub measurement_maps: Vec<DenseMatrix>,
    pub y: Vec<f64>,
    pub shape: (usize, usize),
}

impl MatrixProblem {
    pub fn new(measurement_maps: Vec<DenseMatrix>, y: Vec<f64>, shape: (usize, usize)) -> Result<Self> {
        if measurement_maps.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} maps but {} measurements", measurement_maps.len(), y.len())));
        }
        if measurement_maps.iter().any(|a| a.shape() != shape) {
            return Err(Error::DimensionMismatch(format!("every map must be {}x{}", shape.0, shape.1)));
        }
        Ok(Self { measurement_maps, y, shape })
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// `Φ(M) = (⟨Aᵢ, M⟩)ᵢ`.
    pub fn apply(&self, m: &DenseMatrix) -> Vec<f64> {
        self.measurement_maps.iter().map(|a| a.inner(m)).collect()
    }

    pub fn adjoint(&self, z: &[f64]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.shape.0, self.shape.1);
        for (a, &zi) in self.measurement_maps.iter().zip(z) {
            out = out.add(&a.scale(zi));
        }
        out
    }

    /// Stacked flattened maps, an `m x (p·n)` matrix.
    pub fn flattened(&self) -> DenseMatrix {
        let cols = self.shape.0 * self.shape.1;
        DenseMatrix::from_fn(self.m(), cols, |i, j| self.measurement_maps[i].as_slice()[j])
    }

    pub fn residual(&self, m: &DenseMatrix) -> f64 {
        norm_inf(&sub(&self.apply(m), &self.y))
    }
}

/// Parameters of the splitting solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplittingConfig {
    pub relaxation: f64,
    pub gamma: f64,
    pub eps_feas: f64,
    pub eps_gap: f64,
    pub max_iters: usize,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        Self { relaxation: 1.0, gamma: 1.0, eps_feas: 1e-7, eps_gap: 1e-5, max_iters: 50_000 }
    }
}
