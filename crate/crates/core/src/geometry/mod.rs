//! Face structure of polyhedra and atomic decompositions over their
//! extreme points and extreme rays.

mod birkhoff;
mod caratheodory;
mod face;
mod slice;

pub use birkhoff::{birkhoff_decompose, permutation_of};
pub use caratheodory::{caratheodory_reduce, klee_reduce};
pub use face::{is_extreme_point, minimal_face};
pub use slice::{enumerate_slice_extreme_points, slice_extreme_point_bound, SLICE_MAX_CODIM, SLICE_MAX_ROWS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, norm2, sub, DenseMatrix};

/// Generator description `conv(vertices) + cone(rays)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    pub vertices: Vec<Vec<f64>>,
    pub rays: Vec<Vec<f64>>,
}

impl VPolytope {
    pub fn new(vertices: Vec<Vec<f64>>, rays: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.first().or(rays.first()).map_or(0, Vec::len);
        if vertices.iter().chain(&rays).any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch("generators of different dimensions".into()));
        }
        if rays.iter().any(|r| r.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidInput("zero ray direction".into()));
        }
        Ok(Self { vertices, rays })
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().or(self.rays.first()).map_or(0, Vec::len)
    }

    /// Decomposes `p` over these generators (see [`klee_reduce`]).
    pub fn decompose(&self, p: &[f64]) -> Result<AtomicDecomposition> {
        klee_reduce(p, &self.vertices, &self.rays)
    }
}

/// `{x : A_ineq x ≤ b_ineq, A_eq x = b_eq}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPolyhedron {
    pub a_ineq: DenseMatrix,
    pub b_ineq: Vec<f64>,
    pub a_eq: DenseMatrix,
    pub b_eq: Vec<f64>,
}

impl HPolyhedron {
    pub fn new(a_ineq: DenseMatrix, b_ineq: Vec<f64>, a_eq: DenseMatrix, b_eq: Vec<f64>) -> Result<Self> {
        if a_ineq.rows() != b_ineq.len() || a_eq.rows() != b_eq.len() {
            return Err(Error::DimensionMismatch("row count does not match right-hand side".into()));
        }
        let dim = if a_ineq.rows() > 0 { a_ineq.cols() } else { a_eq.cols() };
        if (a_ineq.rows() > 0 && a_ineq.cols() != dim) || (a_eq.rows() > 0 && a_eq.cols() != dim) {
            return Err(Error::DimensionMismatch("inequality and equality blocks disagree on dimension".into()));
        }
        Ok(Self { a_ineq, b_ineq, a_eq, b_eq })
    }

    /// Inequalities only.
    pub fn from_inequalities(a_ineq: DenseMatrix, b_ineq: Vec<f64>) -> Result<Self> {
        let n = a_ineq.cols();
        Self::new(a_ineq, b_ineq, DenseMatrix::zeros(0, n), Vec::new())
    }

    /// `[0, 1]^n`.
    pub fn unit_cube(n: usize) -> Self {
        let a = DenseMatrix::identity(n).vstack(&DenseMatrix::identity(n).scale(-1.0));
        let mut b = vec![1.0; n];
        b.extend(std::iter::repeat(0.0).take(n));
        Self::from_inequalities(a, b).expect("cube is well formed")
    }

    /// `{x ≥ 0}` in `R^n`.
    pub fn nonnegative_orthant(n: usize) -> Self {
        Self::from_inequalities(DenseMatrix::identity(n).scale(-1.0), vec![0.0; n]).expect("orthant is well formed")
    }

    /// `{x ≥ 0, A x = b}`.
    pub fn standard_form(a: &DenseMatrix, b: &[f64]) -> Result<Self> {
        let n = a.cols();
        Self::new(DenseMatrix::identity(n).scale(-1.0), vec![0.0; n], a.clone(), b.to_vec())
    }

    pub fn dim(&self) -> usize {
        if self.a_ineq.rows() > 0 {
            self.a_ineq.cols()
        } else {
            self.a_eq.cols()
        }
    }
}

/// A point written as `Σ θᵢ vᵢ + Σ βⱼ rⱼ + u_K`.
///
/// `point_atoms` carry convex weights θᵢ (summing to one when present),
/// `ray_atoms` carry nonnegative conic coefficients βⱼ and the lineality
/// component absorbs whatever lies in the lineality space.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    pub point_atoms: Vec<(Vec<f64>, f64)>,
    pub ray_atoms: Vec<(Vec<f64>, f64)>,
    pub lineality_component: Vec<f64>,
}

impl AtomicDecomposition {
    pub fn empty(dim: usize) -> Self {
        Self { point_atoms: Vec::new(), ray_atoms: Vec::new(), lineality_component: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lineality_component.len()
    }

    pub fn atom_count(&self) -> usize {
        self.point_atoms.len() + self.ray_atoms.len()
    }

    pub fn uses_rays(&self) -> bool {
        !self.ray_atoms.is_empty()
    }

    /// Number of points in the "extreme point or point on an extreme ray"
    /// form: each ray term is merged with one of the point atoms, so with
    /// `k` points and `l ≥ 1` rays this is `k + l - 1`.
    pub fn mixed_count(&self) -> usize {
        if self.ray_atoms.is_empty() {
            self.point_atoms.len()
        } else {
            (self.point_atoms.len() + self.ray_atoms.len()).saturating_sub(usize::from(!self.point_atoms.is_empty()))
        }
    }

    pub fn weight_sum(&self) -> f64 {
        self.point_atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.lineality_component.clone();
        for (v, w) in self.point_atoms.iter().chain(&self.ray_atoms) {
            axpy(*w, v, &mut out);
        }
        out
    }

    pub fn reconstruction_error(&self, p: &[f64]) -> f64 {
        norm2(&sub(&self.reconstruct(), p))
    }

    /// Checks weight signs and normalization.
    pub fn weights_valid(&self, tol: f64) -> bool {
        let nonneg = self.point_atoms.iter().chain(&self.ray_atoms).all(|(_, w)| *w >= -tol);
        let normalized = self.point_atoms.is_empty() || (self.weight_sum() - 1.0).abs() <= 1e-9;
        nonneg && normalized
    }
}
