mod common;

use proptest::prelude::*;
use repkit_core::finite::{
    l1_analysis_solve, nnls_solve, nuclear_min_solve, rank1_atomic_decomposition, rank_reduce_psd_with_cost,
    simplex_solve, LpProblem, LpStatus, MatrixProblem, SplittingConfig,
};
use repkit_core::geometry::{is_extreme_point, HPolyhedron};
use repkit_core::DenseMatrix;

use common::{least_squares, singular_values, sym_eigenvalues};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| DenseMatrix::from_row_major(rows, cols, v).unwrap())
}

fn vector(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn nuclear_norm(m: &DenseMatrix) -> f64 {
    singular_values(m).iter().sum()
}

fn orthogonal(g: &DenseMatrix) -> DenseMatrix {
    let q = common::to_na(g).qr().q();
    DenseMatrix::from_fn(g.rows(), g.rows(), |i, j| q[(i, j)])
}

/// Standard-form LP with a nonnegative point and a dual-feasible cost.
fn lp_instance() -> impl Strategy<Value = (DenseMatrix, Vec<f64>, Vec<f64>)> {
    (1usize..=5, 3usize..=12).prop_flat_map(|(m, n)| {
        (matrix(m, n), vector(n, 0.0, 1.0), vector(m, -1.0, 1.0), vector(n, 0.05, 1.0)).prop_map(|(a, x0, w, s)| {
            let b = a.matvec(&x0);
            let c = a.tr_matvec(&w).iter().zip(&s).map(|(v, s)| v + s).collect();
            (a, b, c)
        })
    })
}

/// Feasible points of `{Φv = y}` where `k = n − m` rows of `L` vanish, i.e. the
/// candidate minimizers of `‖Lv‖₁` on that affine set.
fn vertex_candidates(phi: &DenseMatrix, y: &[f64], l: &DenseMatrix) -> Vec<Vec<f64>> {
    let (m, n) = phi.shape();
    let mut out = Vec::new();
    common::for_each_subset(l.rows(), n - m, &mut |rows| {
        let stacked: Vec<Vec<f64>> = phi.to_rows().into_iter().chain(rows.iter().map(|&i| l.row(i).to_vec())).collect();
        let cols: Vec<Vec<f64>> = (0..n).map(|j| stacked.iter().map(|r| r[j]).collect()).collect();
        let target: Vec<f64> = y.iter().copied().chain(rows.iter().map(|_| 0.0)).collect();
        if let Some((v, res)) = least_squares(&cols, &target) {
            if res <= 1e-10 {
                out.push(v);
            }
        }
    });
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_returns_sparse_vertices((a, b, c) in lp_instance()) {
        let sol = simplex_solve(&LpProblem::new(c, a.clone(), b.clone()).unwrap()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(sol.support(1e-9).len() <= a.rows());
        prop_assert!(is_extreme_point(&sol.x, &HPolyhedron::standard_form(&a, &b).unwrap(), 1e-9).unwrap());
    }

    #[test]
    fn nnls_kkt_holds((phi, y) in (1usize..=6, 1usize..=20).prop_flat_map(|(m, n)| (matrix(m, n), vector(m, -1.0, 1.0)))) {
        let u = nnls_solve(&phi, &y).unwrap();
        let r: Vec<f64> = phi.matvec(&u).iter().zip(&y).map(|(a, b)| a - b).collect();
        let g = phi.tr_matvec(&r);
        for (ui, gi) in u.iter().zip(&g) {
            prop_assert!(*ui >= 0.0);
            prop_assert!(*gi >= -1e-8);
            prop_assert!(ui * gi <= 1e-8);
        }
        prop_assert!(u.iter().filter(|&&v| v > 0.0).count() <= phi.rows());
        let obj: f64 = r.iter().map(|v| v * v).sum();
        prop_assert!(obj <= y.iter().map(|v| v * v).sum::<f64>());
    }

    #[test]
    fn analysis_beats_every_feasible_point(
        (phi, l, u0, w) in (2usize..=4).prop_flat_map(|n| (1..=n, 1..=n, Just(n))).prop_flat_map(|(m, p, n)| {
            (matrix(m, n), matrix(p, n), vector(n, -1.0, 1.0), prop::collection::vec(vector(n, -2.0, 2.0), 8))
        })
    ) {
        prop_assume!(common::rank(&phi, 1e-9) == phi.rows() && common::rank(&l, 1e-9) == l.rows());
        let y = phi.matvec(&u0);
        let (u, report) = l1_analysis_solve(&phi, &y, &l).unwrap();
        let best = l1(&l.matvec(&u));
        prop_assert!((best - report.objective).abs() <= 1e-9 * (1.0 + best));
        // random feasible points u0 + (I − Φ⁺Φ)w
        let rows_as_cols: Vec<Vec<f64>> = phi.to_rows();
        for wi in &w {
            let (coef, _) = least_squares(&rows_as_cols, wi).unwrap();
            let mut v: Vec<f64> = u0.iter().zip(wi).map(|(a, b)| a + b).collect();
            for (c, row) in coef.iter().zip(&rows_as_cols) {
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi -= c * ri;
                }
            }
            prop_assert!(phi.matvec(&v).iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-9));
            prop_assert!(best <= l1(&l.matvec(&v)) + 1e-8);
        }
        let candidates = vertex_candidates(&phi, &y, &l);
        for v in &candidates {
            prop_assert!(best <= l1(&l.matvec(v)) + 1e-8);
        }
        // with no common kernel the minimum sits at one of the candidates
        if common::rank(&common::stack(&phi, &l), 1e-9) == phi.cols() && !candidates.is_empty() {
            let oracle = candidates.iter().map(|v| l1(&l.matvec(v))).fold(f64::INFINITY, f64::min);
            prop_assert!((best - oracle).abs() <= 1e-8 * (1.0 + oracle));
        }
    }

    #[test]
    fn rank_one_atoms_share_the_nuclear_norm(m in (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| matrix(r, c))) {
        let dec = rank1_atomic_decomposition(&m, 1e-12);
        let total = nuclear_norm(&m);
        prop_assert!((dec.weight_sum() - 1.0).abs() <= 1e-12);
        for (atom, _) in &dec.point_atoms {
            let a = DenseMatrix::from_row_major(m.rows(), m.cols(), atom.clone()).unwrap();
            prop_assert!((nuclear_norm(&a) - total).abs() <= 1e-9 * total);
            prop_assert_eq!(common::rank(&a, 1e-9), 1);
        }
        prop_assert!(dec.reconstruction_error(m.as_slice()) <= 1e-9 * m.frobenius_norm());
    }

    #[test]
    fn psd_reduction_respects_cost(
        (g, maps, c) in (2usize..=5, 1usize..=5).prop_flat_map(|(n, m)| {
            (matrix(n, n), prop::collection::vec(matrix(n, n), m), matrix(n, n))
        })
    ) {
        let n = g.rows();
        let truth = g.matmul(&g.transpose());
        let maps: Vec<DenseMatrix> = maps.iter().map(|a| a.add(&a.transpose()).scale(0.5)).collect();
        let cost = c.matmul(&c.transpose());
        let y: Vec<f64> = maps.iter().map(|a| a.inner(&truth)).collect();
        let prob = MatrixProblem::new(maps.clone(), y.clone(), (n, n)).unwrap();
        let out = rank_reduce_psd_with_cost(&truth, &prob, Some(&cost));
        prop_assert!(cost.inner(&out) <= cost.inner(&truth) + 1e-9 * (1.0 + cost.inner(&truth).abs()));
        let fitted: Vec<f64> = maps.iter().map(|a| a.inner(&out)).collect();
        prop_assert!(fitted.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-7));
        let eig = sym_eigenvalues(&out);
        prop_assert!(eig[0] >= -1e-8 * eig[n - 1].max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nuclear_objective_is_basis_free(
        (maps, y, gu, gv) in (2usize..=4, 2usize..=4, 1usize..=5).prop_flat_map(|(p, n, m)| {
            (prop::collection::vec(matrix(p, n), m), vector(m, -1.0, 1.0), matrix(p, p), matrix(n, n))
        })
    ) {
        let (p, n) = maps[0].shape();
        let prob = MatrixProblem::new(maps.clone(), y.clone(), (p, n)).unwrap();
        let cfg = SplittingConfig::default();
        let Ok(sol) = nuclear_min_solve(&prob, &cfg) else {
            // dependent maps with inconsistent data
            return Ok(());
        };
        let (u, v) = (orthogonal(&gu), orthogonal(&gv));
        let rotated: Vec<DenseMatrix> = maps.iter().map(|a| u.matmul(a).matmul(&v.transpose())).collect();
        let other = nuclear_min_solve(&MatrixProblem::new(rotated, y, (p, n)).unwrap(), &cfg).unwrap();
        let scale = sol.nuclear_norm.max(1e-12);
        prop_assert!((other.nuclear_norm - sol.nuclear_norm).abs() <= 1e-6 * scale,
            "{} vs {}", other.nuclear_norm, sol.nuclear_norm);
    }
}
