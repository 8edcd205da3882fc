mod common;

use proptest::prelude::*;
use repkit_core::audit::{
    audit, decompose_solution, detect_at_infimum, lineality_of, RegularizerSpec, SolutionPayload, RECONSTRUCTION_TOL,
};
use repkit_core::finite::{nnls_solve, simplex_solve, LpProblem, LpStatus};
use repkit_core::measure::{beurling_solve, moments_of, DiscreteMeasure, MomentSystem};
use repkit_core::tv2d::{DiskOperator, DiskSet, Image2D, DEFAULT_QUANT_TOL};
use repkit_core::DenseMatrix;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| DenseMatrix::from_row_major(rows, cols, v).unwrap())
}

/// Standard-form LP with a nonnegative point and a positive dual slack.
fn lp_instance() -> impl Strategy<Value = (DenseMatrix, Vec<f64>, Vec<f64>)> {
    (1usize..=5, 3usize..=12).prop_flat_map(|(m, n)| {
        (
            matrix(m, n),
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, m),
            prop::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(|(a, x0, w, s)| {
                let b = a.matvec(&x0);
                let c = a.tr_matvec(&w).iter().zip(&s).map(|(v, s)| v + s).collect();
                (a, b, c)
            })
    })
}

fn lp_audit(a: &DenseMatrix, b: &[f64], c: &[f64]) -> (usize, bool) {
    let sol = simplex_solve(&LpProblem::new(c.to_vec(), a.clone(), b.to_vec()).unwrap()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let u = SolutionPayload::Vector { values: sol.x };
    let spec = RegularizerSpec::LpEpigraph { cost: c.to_vec() };
    let cert = audit(&u, &spec, a, detect_at_infimum(&u, &spec), 0).unwrap();
    (cert.atom_count, cert.pass)
}

fn measure_audit(sys: &MomentSystem, y: &[f64]) -> (usize, bool) {
    let sol = beurling_solve(sys, y, 256).unwrap();
    let u = SolutionPayload::Measure { measure: sol.measure };
    let spec = RegularizerSpec::MeasureTv;
    let cert = audit(&u, &spec, sys, detect_at_infimum(&u, &spec), 0).unwrap();
    (cert.atom_count, cert.pass)
}

fn signed_measure() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=6, prop::collection::vec((0usize..64, -1.0f64..1.0), 1..=4)).prop_map(|(m, atoms)| {
        let sys = MomentSystem::trigonometric(m).unwrap();
        let mu = DiscreteMeasure { atoms: atoms.iter().map(|&(j, a)| (j as f64 / 64.0, a)).collect() };
        (m, moments_of(&mu, &sys))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_solutions_pass((a, b, c) in lp_instance()) {
        let (count, pass) = lp_audit(&a, &b, &c);
        prop_assert!(pass);
        prop_assert!(count <= a.rows());
    }

    #[test]
    fn nnls_solutions_pass((phi, y) in (1usize..=6, 1usize..=20).prop_flat_map(|(m, n)| {
        (matrix(m, n), prop::collection::vec(-1.0f64..1.0, m))
    })) {
        let u = SolutionPayload::Vector { values: nnls_solve(&phi, &y).unwrap() };
        let spec = RegularizerSpec::NonnegCone;
        let cert = audit(&u, &spec, &phi, detect_at_infimum(&u, &spec), 0).unwrap();
        prop_assert!(cert.pass, "{} atoms against bound {}", cert.mixed_count, cert.bound);
    }

    #[test]
    fn measure_solutions_pass((m, y) in signed_measure()) {
        let sys = MomentSystem::trigonometric(m).unwrap();
        let (count, pass) = measure_audit(&sys, &y);
        prop_assert!(pass);
        prop_assert!(count <= m);
    }

    #[test]
    fn scaling_data_keeps_the_certificate((a, b, c) in lp_instance(), (m, y) in signed_measure(), t in 0.01f64..100.0) {
        let tb: Vec<f64> = b.iter().map(|v| t * v).collect();
        prop_assert_eq!(lp_audit(&a, &tb, &c), lp_audit(&a, &b, &c));
        let sys = MomentSystem::trigonometric(m).unwrap();
        let ty: Vec<f64> = y.iter().map(|v| t * v).collect();
        prop_assert_eq!(measure_audit(&sys, &ty), measure_audit(&sys, &y));
    }

    #[test]
    fn lineality_splits_into_image_and_kernel(
        (phi, left, right) in (2usize..=7, 1usize..=5).prop_flat_map(|(n, m)| {
            (matrix(m, n), matrix(n + 2, 1.max(n / 2)), matrix(1.max(n / 2), n))
        })
    ) {
        // L of rank ≤ n/2, so its kernel is nontrivial
        let l = left.matmul(&right);
        let rep = lineality_of(&RegularizerSpec::L1Analysis { l: l.clone() }, &phi).unwrap();
        let rank_l = common::rank(&l, 1e-9);
        prop_assert_eq!(rep.dim(), phi.cols() - rank_l);
        prop_assert_eq!(rep.d + rep.kernel_overlap, rep.dim());
        // dim Φ(ker L) = rank [L; Φ] − rank L
        prop_assert_eq!(rep.d, common::rank(&common::stack(&l, &phi), 1e-9) - rank_l);
        for kind in [RegularizerSpec::Nuclear, RegularizerSpec::NonnegCone] {
            let rep = lineality_of(&kind, &phi).unwrap();
            prop_assert_eq!((rep.dim(), rep.d, rep.kernel_overlap), (0, 0, 0));
        }
    }

    #[test]
    fn decompositions_reconstruct(
        (v, l, g, s) in (1usize..=6).prop_flat_map(|n| {
            (prop::collection::vec(-1.0f64..1.0, n * n), matrix(n + 1, n * n), matrix(n, n), prop::collection::vec(0.0f64..1.0, 8))
        })
    ) {
        let n = g.rows();
        let nonneg: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
        let locs = |vals: &[f64]| DiscreteMeasure {
            atoms: vals.iter().enumerate().map(|(i, &a)| (i as f64 / vals.len() as f64, a)).filter(|a| a.1 != 0.0).collect(),
        };
        let cases = [
            (SolutionPayload::Vector { values: nonneg.clone() }, RegularizerSpec::NonnegCone),
            (SolutionPayload::Vector { values: nonneg.clone() }, RegularizerSpec::LpEpigraph { cost: s.clone() }),
            (SolutionPayload::Vector { values: v.clone() }, RegularizerSpec::L1Analysis { l }),
            (SolutionPayload::Matrix { matrix: DenseMatrix::from_row_major(n, n, v.clone()).unwrap() }, RegularizerSpec::Nuclear),
            (SolutionPayload::Matrix { matrix: g.matmul(&g.transpose()) }, RegularizerSpec::PsdCone),
            (SolutionPayload::Measure { measure: locs(&v) }, RegularizerSpec::MeasureTv),
            (SolutionPayload::Measure { measure: locs(&nonneg) }, RegularizerSpec::MeasureNonneg),
        ];
        for (u, spec) in &cases {
            let x = u.flatten();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dec = decompose_solution(u, spec).unwrap();
            let err = dec.reconstruct().iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(err <= RECONSTRUCTION_TOL * norm.max(f64::MIN_POSITIVE), "{}: {}", spec.kind_name(), err);
            prop_assert!(dec.weights_valid(1e-12));
        }
    }

    #[test]
    fn staircase_images_reconstruct(
        w in 4usize..=16,
        h in 4usize..=16,
        base in -1.0f64..1.0,
        steps in prop::collection::vec((0.1f64..1.0, 0usize..4, 0usize..4), 0..=3),
    ) {
        // nested rectangles shrinking from the border, each raising the level
        let image = Image2D::from_fn(w, h, |c, r| {
            let mut v = base;
            let (mut x0, mut y0) = (0, 0);
            for &(jump, dx, dy) in &steps {
                x0 += dx;
                y0 += dy;
                if c >= x0 && r >= y0 {
                    v += jump;
                }
            }
            v
        });
        let u = SolutionPayload::Image { image };
        let spec = RegularizerSpec::Tv2d { width: w, height: h };
        let phi = DiskOperator::new(&DiskSet { disks: Vec::new() }, w, h).unwrap();
        let cert = audit(&u, &spec, &phi, detect_at_infimum(&u, &spec), 0).unwrap();
        prop_assert!(cert.reconstruction_error <= DEFAULT_QUANT_TOL);
        prop_assert!(cert.reconstruction_error <= 1e-12);
    }
}
