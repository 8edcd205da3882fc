mod common;

use proptest::prelude::*;
use repkit_core::linalg::{null_space_basis, op_norm_estimate, pseudo_inverse, rank, svd};
use repkit_core::DenseMatrix;

use common::singular_values;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DenseMatrix::from_row_major(r, c, v).unwrap())
    })
}

/// Random matrix of prescribed rank built from two thin factors.
fn low_rank(max_dim: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_dim, 1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c, k)| {
        (matrix_exact(r, k), matrix_exact(k, c)).prop_map(|(a, b)| a.matmul(&b))
    })
}

fn matrix_exact(r: usize, c: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DenseMatrix::from_row_major(r, c, v).unwrap())
}

/// Orthogonal factor of a QR decomposition.
fn orthogonal(n: usize) -> impl Strategy<Value = DenseMatrix> {
    matrix_exact(n, n).prop_map(move |g| {
        let q = common::to_na(&g).qr().q();
        DenseMatrix::from_fn(n, n, |i, j| q[(i, j)])
    })
}

fn orthonormal_columns(m: &DenseMatrix, tol: f64) -> bool {
    let g = m.transpose().matmul(m);
    g.sub(&DenseMatrix::identity(m.cols())).max_abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_reconstructs(m in matrix(8, 8)) {
        let dec = svd(&m);
        let s = &dec.singular_values;
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.iter().all(|&v| v >= 0.0));
        let us = DenseMatrix::from_fn(dec.u.rows(), s.len(), |i, j| dec.u[(i, j)] * s[j]);
        let rec = us.matmul(&dec.v.transpose());
        prop_assert!(rec.sub(&m).frobenius_norm() <= 1e-10 * m.frobenius_norm().max(f64::MIN_POSITIVE));
        prop_assert!(orthonormal_columns(&dec.u, 1e-10));
        prop_assert!(orthonormal_columns(&dec.v, 1e-10));
        let oracle = singular_values(&m);
        for (a, b) in s.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10 * oracle[0].max(1.0));
        }
    }

    #[test]
    fn svd_is_deterministic(m in matrix(6, 6)) {
        let (a, b) = (svd(&m), svd(&m));
        prop_assert_eq!(a.u, b.u);
        prop_assert_eq!(a.v, b.v);
        let bits = |s: &[f64]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.singular_values), bits(&b.singular_values));
    }

    #[test]
    fn rank_ignores_permutations(m in low_rank(6), seed in any::<u64>()) {
        let (r, c) = m.shape();
        let rows = permute(r, seed);
        let cols = permute(c, seed.rotate_left(17));
        let pm = DenseMatrix::from_fn(r, c, |i, j| m[(rows[i], cols[j])]);
        prop_assert_eq!(rank(&pm, 1e-9), rank(&m, 1e-9));
        prop_assert_eq!(rank(&m, 1e-9), common::rank(&m, 1e-9));
    }

    #[test]
    fn rank_ignores_orthogonal_transforms(
        (m, q1, q2) in low_rank(6).prop_flat_map(|m| {
            let (r, c) = m.shape();
            (Just(m), orthogonal(r), orthogonal(c))
        })
    ) {
        let t = q1.matmul(&m).matmul(&q2);
        prop_assert_eq!(rank(&t, 1e-9), rank(&m, 1e-9));
    }

    #[test]
    fn null_space_is_orthonormal_kernel(m in low_rank(6)) {
        let b = null_space_basis(&m, 1e-9);
        prop_assert_eq!(b.cols(), m.cols() - common::rank(&m, 1e-9));
        if b.cols() > 0 {
            prop_assert!(orthonormal_columns(&b, 1e-10));
            prop_assert!(m.matmul(&b).max_abs() <= 1e-9 * m.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn pseudo_inverse_meets_penrose_conditions(l in low_rank(6)) {
        let p = pseudo_inverse(&l, 1e-9);
        let tol = 1e-9 * l.frobenius_norm().max(1.0);
        let lpl = l.matmul(&p).matmul(&l);
        let plp = p.matmul(&l).matmul(&p);
        let lp = l.matmul(&p);
        let pl = p.matmul(&l);
        // scale the conditions on L⁺ by its size
        let ptol = 1e-9 * p.frobenius_norm().max(1.0);
        prop_assert!(lpl.sub(&l).max_abs() <= tol);
        prop_assert!(plp.sub(&p).max_abs() <= ptol);
        prop_assert!(lp.sub(&lp.transpose()).max_abs() <= tol.max(ptol));
        prop_assert!(pl.sub(&pl.transpose()).max_abs() <= tol.max(ptol));
    }

    #[test]
    fn power_iteration_stays_below_norm(m in matrix(6, 6), seed in any::<u64>()) {
        let est = op_norm_estimate(|x| m.matvec(x), |z| m.tr_matvec(z), m.cols(), 100, seed);
        let top = singular_values(&m)[0];
        prop_assert!(est <= top * (1.0 + 1e-3) + 1e-15);
        let again = op_norm_estimate(|x| m.matvec(x), |z| m.tr_matvec(z), m.cols(), 100, seed);
        prop_assert_eq!(est.to_bits(), again.to_bits());
    }
}

fn permute(n: usize, seed: u64) -> Vec<usize> {
    use rand::{seq::SliceRandom, SeedableRng};
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    p
}

