use super::{is_extreme_point, HPolyhedron};
use crate::error::{Error, Result};
use crate::linalg::{self, norm1, norm2, null_space_basis, pseudo_inverse, rank, DenseMatrix, DEFAULT_RANK_TOL};

/// Largest `p - n` accepted by [`enumerate_slice_extreme_points`].
pub const SLICE_MAX_CODIM: usize = 8;
/// Largest `p` accepted by [`enumerate_slice_extreme_points`].
pub const SLICE_MAX_ROWS: usize = 16;

/// `2^(k+1) · C(p, k+1)` with `k = p - n`: the count of (support, sign)
/// pairs an extreme point of `ran(L) ∩ B₁ᵖ` can sit on.
pub fn slice_extreme_point_bound(p: usize, n: usize) -> u128 {
    let k1 = (p - n + 1) as u32;
    (1u128 << k1) * binomial(p as u128, k1 as u128)
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// All extreme points of `ran(L) ∩ B₁ᵖ`, returned as points `z = L x` of `Rᵖ`.
///
/// For `L` of size `p x n` with full column rank, an extreme point lies on a
/// face of the ℓ¹ ball of dimension `k = p - n`, so it has at most `k + 1`
/// nonzeros. Every support of size at most `k + 1` and every sign pattern on
/// it is tried: the candidate is the unique solution of `Nᵀz = 0` (with `N` a
/// basis of `ran(L)^⊥`) and `sᵀz = 1`. Survivors must have the right signs,
/// unit ℓ¹ norm and pass an extremality test on the lifted description
/// `{(x, t) : ±Lx ≤ t, Σt ≤ 1}`.
pub fn enumerate_slice_extreme_points(l: &DenseMatrix, tol: f64) -> Result<Vec<Vec<f64>>> {
    let (p, n) = l.shape();
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if p > SLICE_MAX_ROWS || p < n || p - n > SLICE_MAX_CODIM {
        return Err(Error::CombinatorialLimitExceeded(format!(
            "L is {p}x{n}; need n <= p <= {SLICE_MAX_ROWS} and p - n <= {SLICE_MAX_CODIM}"
        )));
    }
    if n == 0 || rank(l, DEFAULT_RANK_TOL) < n {
        return Err(Error::InvalidInput("L must have full column rank".into()));
    }
    let k = p - n;
    let normal = null_space_basis(&l.transpose(), DEFAULT_RANK_TOL); // p x k
    let lpinv = pseudo_inverse(l, DEFAULT_RANK_TOL);
    let lifted = lifted_ball(l);

    let mut found: Vec<Vec<f64>> = Vec::new();
    for size in 1..=k + 1 {
        for support in combinations(p, size) {
            for mask in 0u32..(1u32 << size) {
                let signs: Vec<f64> = (0..size).map(|b| if mask >> b & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let Some(z) = candidate(&normal, &support, &signs, p, tol) else { continue };
                if found.iter().any(|f| linalg::norm_inf(&linalg::sub(f, &z)) <= tol) {
                    continue;
                }
                let x = lpinv.matvec(&z);
                let mut point = x.clone();
                point.extend(z.iter().map(|v| v.abs()));
                if is_extreme_point(&point, &lifted, tol.max(1e-9))? {
                    found.push(z);
                }
            }
        }
    }
    Ok(found)
}

fn candidate(normal: &DenseMatrix, support: &[usize], signs: &[f64], p: usize, tol: f64) -> Option<Vec<f64>> {
    let size = support.len();
    let k = normal.cols();
    // rows: Nᵀ restricted to the support, then the sign row
    let sys = DenseMatrix::from_fn(k + 1, size, |r, c| if r < k { normal[(support[c], r)] } else { signs[c] });
    if rank(&sys, DEFAULT_RANK_TOL) < size {
        return None;
    }
    let mut rhs = vec![0.0; k + 1];
    rhs[k] = 1.0;
    let zs = linalg::lstsq(&sys, &rhs).ok()?;
    let resid = norm2(&linalg::sub(&sys.matvec(&zs), &rhs));
    if resid > tol {
        return None;
    }
    if zs.iter().zip(signs).any(|(z, s)| z * s < -tol) {
        return None;
    }
    let mut z = vec![0.0; p];
    for (&i, &v) in support.iter().zip(&zs) {
        z[i] = if v.abs() <= tol { 0.0 } else { v };
    }
    if (norm1(&z) - 1.0).abs() > tol.max(1e-9) {
        return None;
    }
    Some(z)
}

/// `{(x, t) ∈ Rⁿ × Rᵖ : Lx − t ≤ 0, −Lx − t ≤ 0, Σt ≤ 1}`.
fn lifted_ball(l: &DenseMatrix) -> HPolyhedron {
    let (p, n) = l.shape();
    let a = DenseMatrix::from_fn(2 * p + 1, n + p, |r, c| {
        if r < 2 * p {
            let i = r % p;
            let sign = if r < p { 1.0 } else { -1.0 };
            if c < n {
                sign * l[(i, c)]
            } else if c - n == i {
                -1.0
            } else {
                0.0
            }
        } else if c >= n {
            1.0
        } else {
            0.0
        }
    });
    let mut b = vec![0.0; 2 * p];
    b.push(1.0);
    HPolyhedron::from_inequalities(a, b).expect("lifted ball is well formed")
}

fn combinations(p: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, p: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..p {
            if p - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, p, size, cur, out);
            cur.pop();
        }
    }
    rec(0, p, size, &mut cur, &mut out);
    out
}
