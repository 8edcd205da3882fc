use serde::{Deserialize, Serialize};

use super::{MatrixProblem, SplittingConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, null_space_basis, pseudo_inverse, symmetric_eigen, DenseMatrix, DEFAULT_RANK_TOL};

/// Relative eigenvalue threshold below which a direction is outside the face.
const FACE_TOL: f64 = 1e-9;
/// Relative threshold used when reporting ranks.
pub const PSD_RANK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdSolution {
    pub matrix: DenseMatrix,
    pub rank: usize,
    /// Largest `r` with `r(r+1)/2 <= m`.
    pub barvinok_bound: usize,
    pub within_bound: bool,
    pub constraint_residual: f64,
    /// `⟨C, M⟩` when a cost was given.
    pub objective: Option<f64>,
    pub iterations: usize,
    /// Set when the cost was handled by projected subgradient, whose
    /// stopping rule does not certify optimality.
    pub best_effort: bool,
}

/// `⌊(√(8m+1) − 1)/2⌋`, computed in integers.
pub fn barvinok_bound(m: usize) -> usize {
    let mut r = 0;
    while (r + 1) * (r + 2) / 2 <= m {
        r += 1;
    }
    r
}

fn psd_rank(m: &DenseMatrix, tol: f64) -> usize {
    let eig = symmetric_eigen(m);
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if top == 0.0 {
        return 0;
    }
    eig.values.iter().filter(|&&v| v > tol * top).count()
}

fn project_psd(x: &DenseMatrix) -> DenseMatrix {
    let eig = symmetric_eigen(x);
    let n = x.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = lam * eig.vectors[(i, k)];
            for j in 0..n {
                out[(i, j)] += vi * eig.vectors[(j, k)];
            }
        }
    }
    out.symmetrize()
}

struct Feasibility<'a> {
    prob: &'a MatrixProblem,
    a: DenseMatrix,
    apinv: DenseMatrix,
}

enum ApOutcome {
    Converged(DenseMatrix, usize),
    Failed(f64),
}

impl<'a> Feasibility<'a> {
    fn new(prob: &'a MatrixProblem) -> Self {
        let a = prob.flattened();
        let apinv = pseudo_inverse(&a, DEFAULT_RANK_TOL);
        Self { prob, a, apinv }
    }

    fn project_affine(&self, x: &DenseMatrix) -> DenseMatrix {
        let r = linalg::sub(&self.a.matvec(x.as_slice()), &self.prob.y);
        let corr = self.apinv.matvec(&r);
        let data = x.as_slice().iter().zip(&corr).map(|(v, c)| v - c).collect();
        DenseMatrix::from_row_major(x.rows(), x.cols(), data).expect("shape preserved").symmetrize()
    }

    /// Alternate between the affine set and the cone, starting from `x`.
    fn alternate(&self, x: &DenseMatrix, max_iters: usize, eps: f64) -> ApOutcome {
        let mut x = self.project_affine(x);
        let mut prev: Option<DenseMatrix> = None;
        let mut resid = f64::INFINITY;
        for it in 1..=max_iters {
            let p = project_psd(&x);
            resid = self.prob.residual(&p);
            if resid <= eps {
                return ApOutcome::Converged(p, it);
            }
            if let Some(q) = &prev {
                if p.sub(q).frobenius_norm() <= 1e-15 * (1.0 + p.frobenius_norm()) {
                    break;
                }
            }
            x = self.project_affine(&p);
            prev = Some(p);
        }
        ApOutcome::Failed(resid)
    }
}

fn check_symmetric(prob: &MatrixProblem) -> Result<()> {
    let (p, n) = prob.shape;
    if p != n {
        return Err(Error::InvalidInput(format!("PSD problems need square shape, got {p}x{n}")));
    }
    for (i, a) in prob.measurement_maps.iter().enumerate() {
        if a.sub(&a.transpose()).max_abs() > 1e-12 * (1.0 + a.max_abs()) {
            return Err(Error::InvalidInput(format!("measurement map {i} is not symmetric")));
        }
    }
    Ok(())
}

/// Finds `M ⪰ 0` with `⟨Aᵢ, M⟩ = yᵢ`, optionally lowering `⟨C, M⟩`, then
/// moves to a low-rank point of the solution set with [`rank_reduce_psd`].
///
/// Without a cost this is plain alternating projections. With a cost, steps
/// `M − ηₖC` are pulled back onto the feasible set by a short run of
/// alternating projections; the best feasible iterate is kept.
pub fn psd_solve(prob: &MatrixProblem, cost: Option<&DenseMatrix>, cfg: &SplittingConfig) -> Result<PsdSolution> {
    check_symmetric(prob)?;
    let n = prob.shape.0;
    if let Some(c) = cost {
        if c.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("cost must be {n}x{n}")));
        }
    }
    let feas = Feasibility::new(prob);
    let (mut m, mut iterations) = match feas.alternate(&DenseMatrix::zeros(n, n), cfg.max_iters, cfg.eps_feas) {
        ApOutcome::Converged(m, it) => (m, it),
        ApOutcome::Failed(resid) => {
            return Err(Error::Infeasible(format!("alternating projections stalled at residual {resid:.3e}")))
        }
    };

    if let Some(c) = cost {
        let c = c.symmetrize();
        let cn = c.frobenius_norm();
        if cn > 0.0 {
            let step0 = 0.1 * m.frobenius_norm().max(1.0) / cn;
            let outer = cfg.max_iters.min(500);
            let mut best = (c.inner(&m), m.clone());
            let mut x = m.clone();
            for k in 1..=outer {
                let trial = x.sub(&c.scale(step0 / (k as f64).sqrt()));
                iterations += 1;
                match feas.alternate(&trial, 200, cfg.eps_feas) {
                    ApOutcome::Converged(p, _) => {
                        let obj = c.inner(&p);
                        if obj < best.0 {
                            best = (obj, p.clone());
                        }
                        x = p;
                    }
                    ApOutcome::Failed(_) => break,
                }
            }
            m = best.1;
        }
    }

    let m = rank_reduce_psd_with_cost(&m, prob, cost);
    let rank = psd_rank(&m, PSD_RANK_TOL);
    let bound = barvinok_bound(prob.m());
    Ok(PsdSolution {
        rank,
        barvinok_bound: bound,
        within_bound: rank <= bound,
        constraint_residual: prob.residual(&m),
        objective: cost.map(|c| c.inner(&m)),
        iterations,
        best_effort: cost.is_some(),
        matrix: m,
    })
}

/// Facial reduction: see [`rank_reduce_psd_with_cost`].
pub fn rank_reduce_psd(m: &DenseMatrix, prob: &MatrixProblem) -> DenseMatrix {
    rank_reduce_psd_with_cost(m, prob, None)
}

/// Factor `M = VVᵀ`, look for a symmetric `Δ` with `⟨VᵀAᵢV, Δ⟩ = 0` (and
/// `⟨VᵀCV, Δ⟩ = 0` when a cost is given), and replace `M` by `V(I + tΔ)Vᵀ`
/// with `t` chosen so that `I + tΔ` becomes singular. The rank drops each
/// round until `r(r+1)/2` no longer exceeds the number of independent
/// restricted constraints.
pub fn rank_reduce_psd_with_cost(m: &DenseMatrix, prob: &MatrixProblem, cost: Option<&DenseMatrix>) -> DenseMatrix {
    let n = m.rows();
    let mut cur = m.symmetrize();
    for _ in 0..=n {
        let Some(v) = face_factor(&cur) else { return DenseMatrix::zeros(n, n) };
        let r = v.cols();
        let restricted = restricted_system(&v, prob, cost);
        let null = null_space_basis(&restricted, DEFAULT_RANK_TOL);
        let delta = if null.cols() > 0 {
            unsvec(&null.column(0), r)
        } else if let Some(c) = cost {
            // the cost row alone may block every direction: allow descent
            let b = restricted_system(&v, prob, None);
            let null = null_space_basis(&b, DEFAULT_RANK_TOL);
            if null.cols() == 0 {
                break;
            }
            let d = unsvec(&null.column(0), r);
            let slope = v.transpose().matmul(&c.symmetrize()).matmul(&v).inner(&d);
            let d = if slope > 0.0 { d.scale(-1.0) } else { d };
            if symmetric_eigen(&d).values.last().copied().unwrap_or(0.0) >= 0.0 {
                // descent along a cone direction; nothing bounded to step to
                break;
            }
            d
        } else {
            break;
        };
        let eig = symmetric_eigen(&delta);
        let lo = *eig.values.last().expect("r >= 1");
        let (dir, t) = if lo < 0.0 { (delta, -1.0 / lo) } else { (delta.scale(-1.0), 1.0 / eig.values[0]) };
        let x = DenseMatrix::identity(r).add(&dir.scale(t));
        cur = v.matmul(&project_psd(&x)).matmul(&v.transpose()).symmetrize();
    }
    if cost.is_some() {
        return cur;
    }
    polish(&cur, prob)
}

/// `V = Q Λ^{1/2}` over the eigenvalues above the face threshold.
fn face_factor(m: &DenseMatrix) -> Option<DenseMatrix> {
    let eig = symmetric_eigen(m);
    let top = eig.values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return None;
    }
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > FACE_TOL * top).collect();
    let n = m.rows();
    Some(DenseMatrix::from_fn(n, keep.len(), |i, c| eig.vectors[(i, keep[c])] * eig.values[keep[c]].sqrt()))
}

/// Rows `svec(VᵀAᵢV)` in the inner-product-preserving layout used by [`unsvec`].
fn restricted_system(v: &DenseMatrix, prob: &MatrixProblem, cost: Option<&DenseMatrix>) -> DenseMatrix {
    let r = v.cols();
    let mut rows: Vec<Vec<f64>> = prob
        .measurement_maps
        .iter()
        .map(|a| svec_row(&v.transpose().matmul(a).matmul(v)))
        .collect();
    if let Some(c) = cost {
        rows.push(svec_row(&v.transpose().matmul(&c.symmetrize()).matmul(v)));
    }
    let cols = r * (r + 1) / 2;
    DenseMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

fn svec_row(s: &DenseMatrix) -> Vec<f64> {
    let r = s.rows();
    let mut out = Vec::with_capacity(r * (r + 1) / 2);
    for a in 0..r {
        out.push(s[(a, a)]);
        for b in a + 1..r {
            out.push(s[(a, b)] + s[(b, a)]);
        }
    }
    out
}

fn unsvec(x: &[f64], r: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(r, r);
    let mut k = 0;
    for a in 0..r {
        out[(a, a)] = x[k];
        k += 1;
        for b in a + 1..r {
            out[(a, b)] = x[k];
            out[(b, a)] = x[k];
            k += 1;
        }
    }
    out
}

/// Removes residual drift by a least-norm correction inside the current face,
/// kept only if it stays PSD and lowers the residual.
fn polish(m: &DenseMatrix, prob: &MatrixProblem) -> DenseMatrix {
    let Some(v) = face_factor(m) else { return m.clone() };
    let r = v.cols();
    let b = restricted_system(&v, prob, None);
    let ident = svec_identity(r);
    let resid = linalg::sub(&prob.y, &b.matvec(&ident));
    let Ok(dx) = linalg::lstsq(&b, &resid) else { return m.clone() };
    let x = DenseMatrix::identity(r).add(&unsvec(&dx, r));
    if symmetric_eigen(&x).values.last().copied().unwrap_or(0.0) < 0.0 {
        return m.clone();
    }
    let cand = v.matmul(&x).matmul(&v.transpose()).symmetrize();
    if prob.residual(&cand) < prob.residual(m) {
        cand
    } else {
        m.clone()
    }
}

fn svec_identity(r: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(r * (r + 1) / 2);
    for a in 0..r {
        out.push(1.0);
        out.extend(std::iter::repeat(0.0).take(r - a - 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).symmetrize()
    }

    #[test]
    fn barvinok_values() {
        assert_eq!(barvinok_bound(1), 1);
        assert_eq!(barvinok_bound(3), 2);
        assert_eq!(barvinok_bound(6), 3);
        assert_eq!(barvinok_bound(10), 4);
        assert_eq!(barvinok_bound(9), 3);
        for m in 1..200usize {
            let f = ((((8 * m + 1) as f64).sqrt() - 1.0) / 2.0).floor() as usize;
            assert_eq!(barvinok_bound(m), f);
        }
    }

    #[test]
    fn trace_one() {
        let prob = MatrixProblem::new(vec![DenseMatrix::identity(4)], vec![1.0], (4, 4)).unwrap();
        let sol = psd_solve(&prob, None, &SplittingConfig::default()).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.matrix.trace() - 1.0).abs() < 1e-9);
        assert!(symmetric_eigen(&sol.matrix).values[3] > -1e-8);
    }

    #[test]
    fn identity_two_reduces_to_rank_one() {
        let prob = MatrixProblem::new(vec![DenseMatrix::identity(2)], vec![2.0], (2, 2)).unwrap();
        let out = rank_reduce_psd(&DenseMatrix::identity(2), &prob);
        let eig = symmetric_eigen(&out);
        assert!((eig.values[0] - 2.0).abs() < 1e-12);
        assert!(eig.values[1].abs() < 1e-12);
        assert!((out.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_unchanged() {
        let u = [1.0, 2.0, -1.0];
        let m = DenseMatrix::from_fn(3, 3, |i, j| u[i] * u[j]);
        let prob = MatrixProblem::new(vec![DenseMatrix::identity(3)], vec![6.0], (3, 3)).unwrap();
        assert!(rank_reduce_psd(&m, &prob).sub(&m).max_abs() < 1e-12);
    }

    #[test]
    fn random_systems_meet_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [3usize, 6, 10] {
            let g = DenseMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
            let truth = g.matmul(&g.transpose());
            let maps: Vec<DenseMatrix> = (0..m).map(|_| random_symmetric(8, &mut rng)).collect();
            let y = maps.iter().map(|a| a.inner(&truth)).collect();
            let prob = MatrixProblem::new(maps, y, (8, 8)).unwrap();
            let reduced = rank_reduce_psd(&truth, &prob);
            assert!(psd_rank(&reduced, PSD_RANK_TOL) <= barvinok_bound(m));
            assert!(prob.residual(&reduced) <= 1e-7, "{}", prob.residual(&reduced));
            assert!(symmetric_eigen(&reduced).values[7] > -1e-8);
        }
    }

    #[test]
    fn cost_never_increases_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DenseMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
        let truth = g.matmul(&g.transpose());
        let maps: Vec<DenseMatrix> = (0..3).map(|_| random_symmetric(5, &mut rng)).collect();
        let y = maps.iter().map(|a| a.inner(&truth)).collect();
        let prob = MatrixProblem::new(maps, y, (5, 5)).unwrap();
        let c = DenseMatrix::identity(5);
        let out = rank_reduce_psd_with_cost(&truth, &prob, Some(&c));
        assert!(c.inner(&out) <= c.inner(&truth) + 1e-9);
        assert!(prob.residual(&out) <= 1e-7);
    }

    #[test]
    fn rejects_nonsquare() {
        let prob = MatrixProblem::new(vec![DenseMatrix::zeros(2, 3)], vec![1.0], (2, 3)).unwrap();
        assert!(psd_solve(&prob, None, &SplittingConfig::default()).is_err());
    }
}
