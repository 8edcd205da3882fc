//! Certificates that a solution is a combination of few extreme points or
//! rays of the regularizer's level set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{rank1_atomic_decomposition, MatrixProblem};
use crate::geometry::AtomicDecomposition;
use crate::linalg::{self, norm1, norm2, null_space_basis, pseudo_inverse, svd, symmetric_eigen, DenseMatrix, DEFAULT_RANK_TOL};
use crate::measure::{DiscreteMeasure, MomentSystem};
use crate::tv2d::{discrete_tv, level_set_report, DiskOperator, Image2D, DEFAULT_QUANT_TOL};

/// Relative reconstruction tolerance for every kind except `tv2d`.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Singular or eigen values below this fraction of the largest are dropped.
const SPECTRAL_TOL: f64 = 1e-10;
/// Entries below this (relative to the largest) count as zero.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularizerSpec {
    /// Indicator of the nonnegative orthant.
    NonnegCone,
    /// `ψᵀu` plus the orthant indicator; the cost row joins the measurements.
    LpEpigraph { cost: Vec<f64> },
    /// `‖Lu‖₁`.
    L1Analysis {
        #[serde(rename = "L")]
        l: DenseMatrix,
    },
    Nuclear,
    PsdCone,
    MeasureTv,
    MeasureNonneg,
    Tv2d { width: usize, height: usize },
}

impl RegularizerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::NonnegCone => "nonneg_cone",
            Self::LpEpigraph { .. } => "lp_epigraph",
            Self::L1Analysis { .. } => "l1_analysis",
            Self::Nuclear => "nuclear",
            Self::PsdCone => "psd_cone",
            Self::MeasureTv => "measure_tv",
            Self::MeasureNonneg => "measure_nonneg",
            Self::Tv2d { .. } => "tv2d",
        }
    }

    /// Measurements seen by the level-set argument: the LP cost adds one.
    fn effective_m(&self, m: usize) -> usize {
        match self {
            Self::LpEpigraph { .. } => m + 1,
            _ => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SolutionPayload {
    Vector { values: Vec<f64> },
    Matrix { matrix: DenseMatrix },
    Measure { measure: DiscreteMeasure },
    Image { image: Image2D },
}

impl SolutionPayload {
    /// The payload as a flat coordinate vector (row-major for matrices,
    /// amplitudes in atom order for measures).
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            Self::Vector { values } => values.clone(),
            Self::Matrix { matrix } => matrix.as_slice().to_vec(),
            Self::Measure { measure } => measure.amplitudes(),
            Self::Image { image } => image.values.clone(),
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            Self::Vector { .. } => "vector",
            Self::Matrix { .. } => "matrix",
            Self::Measure { .. } => "measure",
            Self::Image { .. } => "image",
        }
    }
}

/// A linear map from a finite-dimensional solution space to `Rᵐ`.
pub trait LinearMeasurement {
    fn m(&self) -> usize;
    /// Dimension of the domain; 0 for measure spaces.
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

impl LinearMeasurement for DenseMatrix {
    fn m(&self) -> usize {
        self.rows()
    }

    fn dim(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

impl LinearMeasurement for MatrixProblem {
    fn m(&self) -> usize {
        self.y.len()
    }

    fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.measurement_maps.iter().map(|a| linalg::dot(a.as_slice(), x)).collect()
    }
}

impl LinearMeasurement for DiskOperator {
    fn m(&self) -> usize {
        DiskOperator::m(self)
    }

    fn dim(&self) -> usize {
        self.width * self.height
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        DiskOperator::apply(self, x)
    }
}

impl LinearMeasurement for MomentSystem {
    fn m(&self) -> usize {
        MomentSystem::m(self)
    }

    fn dim(&self) -> usize {
        0
    }

    fn apply(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; MomentSystem::m(self)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinealityReport {
    /// Columns span the lineality space.
    pub lineality_basis: DenseMatrix,
    /// `dim Φ(lin C)`.
    pub d: usize,
    /// `dim(lin C ∩ ker Φ)`.
    pub kernel_overlap: usize,
}

impl LinealityReport {
    pub fn dim(&self) -> usize {
        self.lineality_basis.cols()
    }
}

/// Lineality space of the regularizer's level sets and its image under `Φ`.
pub fn lineality_of(spec: &RegularizerSpec, phi: &dyn LinearMeasurement) -> Result<LinealityReport> {
    let n = phi.dim();
    let basis = match spec {
        RegularizerSpec::L1Analysis { l } => {
            if l.cols() != n {
                return Err(Error::DimensionMismatch(format!("L has {} columns, Phi acts on R^{n}", l.cols())));
            }
            null_space_basis(l, DEFAULT_RANK_TOL)
        }
        RegularizerSpec::Tv2d { width, height } => {
            if width * height != n {
                return Err(Error::DimensionMismatch(format!("{width}x{height} image, Phi acts on R^{n}")));
            }
            DenseMatrix::from_fn(n, 1, |_, _| 1.0 / (n as f64).sqrt())
        }
        _ => DenseMatrix::zeros(n, 0),
    };
    let k = basis.cols();
    let d = if k == 0 {
        0
    } else {
        let cols: Vec<Vec<f64>> = (0..k).map(|j| phi.apply(&basis.column(j))).collect();
        // the basis is orthonormal, so an absolute floor separates a blind
        // direction from a weakly seen one
        let s = svd(&DenseMatrix::from_columns(&cols, phi.m())).singular_values;
        let top = s.first().copied().unwrap_or(0.0).max(1.0);
        s.iter().filter(|&&v| v > DEFAULT_RANK_TOL * top).count()
    };
    Ok(LinealityReport { lineality_basis: basis, d, kernel_overlap: k - d })
}

fn mismatch(spec: &RegularizerSpec, u: &SolutionPayload) -> Error {
    Error::KindMismatch(format!("{} cannot take a {} payload", spec.kind_name(), u.type_name()))
}

/// Conic decomposition `u = Σ uᵢ eᵢ` over the support.
fn coordinate_rays(values: &[f64]) -> Result<AtomicDecomposition> {
    let n = values.len();
    let scale = linalg::norm_inf(values);
    if values.iter().any(|&v| v < -1e-9 * scale.max(1.0)) {
        return Err(Error::InvalidInput("payload has negative entries; not in the cone".into()));
    }
    let mut dec = AtomicDecomposition::empty(n);
    for (i, &v) in values.iter().enumerate() {
        if v > SUPPORT_TOL * scale {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            dec.ray_atoms.push((e, v));
        }
    }
    Ok(dec)
}

/// Point atoms `T·sign(vᵢ)·eᵢ` with weights `|vᵢ|/T`, `T = ‖v‖₁`.
fn signed_coordinate_points(values: &[f64]) -> AtomicDecomposition {
    let n = values.len();
    let scale = linalg::norm_inf(values);
    let support: Vec<usize> = (0..n).filter(|&i| values[i].abs() > SUPPORT_TOL * scale).collect();
    let total: f64 = support.iter().map(|&i| values[i].abs()).sum();
    let mut dec = AtomicDecomposition::empty(n);
    for &i in &support {
        let mut e = vec![0.0; n];
        e[i] = total * values[i].signum();
        dec.point_atoms.push((e, values[i].abs() / total));
    }
    dec
}

/// Kind-dispatched atoms of the solution's level set.
pub fn decompose_solution(u: &SolutionPayload, spec: &RegularizerSpec) -> Result<AtomicDecomposition> {
    match (spec, u) {
        (RegularizerSpec::NonnegCone | RegularizerSpec::LpEpigraph { .. }, SolutionPayload::Vector { values }) => {
            coordinate_rays(values)
        }
        (RegularizerSpec::MeasureNonneg, SolutionPayload::Measure { measure }) => coordinate_rays(&measure.amplitudes()),
        (RegularizerSpec::MeasureTv, SolutionPayload::Measure { measure }) => {
            Ok(signed_coordinate_points(&measure.amplitudes()))
        }
        (RegularizerSpec::L1Analysis { l }, SolutionPayload::Vector { values }) => {
            if l.cols() != values.len() {
                return Err(Error::DimensionMismatch(format!("L has {} columns, u has {}", l.cols(), values.len())));
            }
            Ok(analysis_atoms(values, l))
        }
        (RegularizerSpec::Nuclear, SolutionPayload::Matrix { matrix }) => Ok(rank1_atomic_decomposition(matrix, SPECTRAL_TOL)),
        (RegularizerSpec::PsdCone, SolutionPayload::Matrix { matrix }) => psd_atoms(matrix),
        (RegularizerSpec::Tv2d { width, height }, SolutionPayload::Image { image }) => {
            if (image.width, image.height) != (*width, *height) {
                return Err(Error::DimensionMismatch(format!(
                    "expected a {width}x{height} image, got {}x{}",
                    image.width, image.height
                )));
            }
            Ok(tv2d_atoms(image))
        }
        _ => Err(mismatch(spec, u)),
    }
}

/// `u = Σ αᵢ L⁺eᵢ + u_K` rewritten with point atoms `T·sign(αᵢ)·L⁺eᵢ`.
fn analysis_atoms(u: &[f64], l: &DenseMatrix) -> AtomicDecomposition {
    let lpinv = pseudo_inverse(l, DEFAULT_RANK_TOL);
    let lu = l.matvec(u);
    let scale = linalg::norm_inf(&lu);
    let support: Vec<usize> = (0..lu.len()).filter(|&i| lu[i].abs() > SUPPORT_TOL * scale).collect();
    let total: f64 = support.iter().map(|&i| lu[i].abs()).sum();
    let mut dec = AtomicDecomposition::empty(u.len());
    let mut range_part = vec![0.0; u.len()];
    for &i in &support {
        let col = lpinv.column(i);
        linalg::axpy(lu[i], &col, &mut range_part);
        let atom: Vec<f64> = col.iter().map(|v| total * lu[i].signum() * v).collect();
        dec.point_atoms.push((atom, lu[i].abs() / total));
    }
    dec.lineality_component = linalg::sub(u, &range_part);
    dec
}

/// Spectral rays `λᵢ · vᵢvᵢᵀ`.
fn psd_atoms(m: &DenseMatrix) -> Result<AtomicDecomposition> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::InvalidInput("PSD payload must be square".into()));
    }
    let eig = symmetric_eigen(&m.symmetrize());
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if eig.values.last().copied().unwrap_or(0.0) < -1e-8 * top.max(1.0) {
        return Err(Error::InvalidInput("payload is not positive semidefinite".into()));
    }
    let mut dec = AtomicDecomposition::empty(n * n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= SPECTRAL_TOL * top {
            continue;
        }
        let v = eig.vectors.column(k);
        let atom: Vec<f64> = (0..n * n).map(|idx| v[idx / n] * v[idx % n]).collect();
        dec.ray_atoms.push((atom, lam));
    }
    Ok(dec)
}

/// Coarea form of the quantized image: `c + Σₖ jₖ 1_{Fₖ}` over superlevel
/// sets, with atoms `Σ·1_F/TV(1_F)` and the constant as lineality part.
fn tv2d_atoms(u: &Image2D) -> AtomicDecomposition {
    let rep = level_set_report(u, DEFAULT_QUANT_TOL);
    let n = u.len();
    let mut dec = AtomicDecomposition::empty(n);
    if rep.levels.is_empty() {
        return dec;
    }
    let base = rep.levels[0].value;
    dec.lineality_component = vec![base; n];
    let mut parts = Vec::new();
    for k in 0..rep.levels.len() - 1 {
        let jump = rep.levels[k + 1].value - rep.levels[k].value;
        let mask = rep.superlevel_mask(k);
        let indicator = Image2D {
            width: u.width,
            height: u.height,
            values: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        };
        let per = discrete_tv(&indicator);
        parts.push((indicator.values, jump, per));
    }
    let total: f64 = parts.iter().map(|(_, j, p)| j * p).sum();
    for (ind, jump, per) in parts {
        let atom: Vec<f64> = ind.iter().map(|v| v * total / per).collect();
        dec.point_atoms.push((atom, jump * per / total));
    }
    dec
}

/// Whether `R(u)` equals the infimum of `R` over its whole domain.
pub fn detect_at_infimum(u: &SolutionPayload, spec: &RegularizerSpec) -> bool {
    let x = u.flatten();
    let tol = 1e-12 * (1.0 + linalg::norm_inf(&x));
    match (spec, u) {
        (RegularizerSpec::NonnegCone | RegularizerSpec::PsdCone | RegularizerSpec::MeasureNonneg, _) => true,
        (RegularizerSpec::LpEpigraph { cost }, _) => {
            cost.iter().all(|&c| c >= 0.0) && linalg::dot(cost, &x) <= tol * (1.0 + linalg::norm_inf(cost))
        }
        (RegularizerSpec::L1Analysis { l }, _) => l.cols() == x.len() && norm1(&l.matvec(&x)) <= tol,
        (RegularizerSpec::Nuclear, SolutionPayload::Matrix { matrix }) => {
            svd(matrix).singular_values.iter().sum::<f64>() <= tol
        }
        (RegularizerSpec::MeasureTv, _) => norm1(&x) <= tol,
        (RegularizerSpec::Tv2d { .. }, SolutionPayload::Image { image }) => discrete_tv(image) <= tol,
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresenterCertificate {
    pub kind: String,
    /// Number of measurements, including the cost row for `lp_epigraph`.
    pub m: usize,
    pub d: usize,
    pub j_assumed: usize,
    pub at_infimum: bool,
    pub atom_count: usize,
    pub point_atoms: usize,
    pub ray_atoms: usize,
    /// Points when each ray is merged into a point atom.
    pub mixed_count: usize,
    /// `m + j − d`, plus one at the infimum.
    pub point_bound: usize,
    /// `m + j − d − 1`, plus one at the infimum.
    pub mixed_bound: usize,
    /// The bound that applies: `mixed_bound` if rays are used.
    pub bound: usize,
    pub uses_rays: bool,
    /// `‖Σ θᵢ aᵢ + u_K − u‖₂ / ‖u‖₂`.
    pub reconstruction_error: f64,
    pub reconstruction_tol: f64,
    pub pass: bool,
    pub decomposition: AtomicDecomposition,
}

pub fn audit(
    u: &SolutionPayload,
    spec: &RegularizerSpec,
    phi: &dyn LinearMeasurement,
    at_infimum: bool,
    j_assumed: usize,
) -> Result<RepresenterCertificate> {
    let dec = decompose_solution(u, spec)?;
    let lin = lineality_of(spec, phi)?;
    let m = spec.effective_m(phi.m());
    let extra = usize::from(at_infimum);
    let point_bound = (m + j_assumed + extra).saturating_sub(lin.d);
    let mixed_bound = (m + j_assumed + extra).saturating_sub(lin.d + 1);
    let uses_rays = dec.uses_rays();
    let (count, bound) = if uses_rays { (dec.mixed_count(), mixed_bound) } else { (dec.point_atoms.len(), point_bound) };

    let x = u.flatten();
    let err = norm2(&linalg::sub(&dec.reconstruct(), &x));
    let reconstruction_error = err / norm2(&x).max(f64::MIN_POSITIVE);
    let reconstruction_tol = match spec {
        RegularizerSpec::Tv2d { .. } => DEFAULT_QUANT_TOL,
        _ => RECONSTRUCTION_TOL,
    };
    Ok(RepresenterCertificate {
        kind: spec.kind_name().to_string(),
        m,
        d: lin.d,
        j_assumed,
        at_infimum,
        atom_count: dec.atom_count(),
        point_atoms: dec.point_atoms.len(),
        ray_atoms: dec.ray_atoms.len(),
        mixed_count: dec.mixed_count(),
        point_bound,
        mixed_bound,
        bound,
        uses_rays,
        pass: count <= bound && reconstruction_error <= reconstruction_tol,
        reconstruction_error,
        reconstruction_tol,
        decomposition: dec,
    })
}
