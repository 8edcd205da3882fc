use crate::error::{Error, Result};
use crate::linalg::{self, norm_inf, DenseMatrix};

/// Lawson-Hanson active-set solver for `min ‖Φu − y‖₂²  s.t. u ≥ 0`.
///
/// The passive set only ever holds linearly independent columns, so the
/// returned point is a vertex of the optimal face with at most `rank(Φ)`
/// nonzeros.
pub fn nnls_solve(phi: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = phi.shape();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!("Phi has {m} rows but y has {} entries", y.len())));
    }
    let mut x = vec![0.0; n];
    if n == 0 {
        return Ok(x);
    }
    let scale = phi.max_abs() * (1.0 + norm_inf(y)).max(1.0);
    let grad_tol = 1e-12 * scale.max(1.0);
    let mut passive = vec![false; n];
    let max_iters = 10 * n;

    let mut w = dual(phi, y, &x);
    let mut iterations = 0;
    loop {
        let mut blocked = vec![false; n];
        let entering = loop {
            let cand = (0..n)
                .filter(|&j| !passive[j] && !blocked[j] && w[j] > grad_tol)
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if w[b] >= w[j] => Some(b),
                    _ => Some(j),
                });
            let Some(j) = cand else { break None };
            // reject columns whose unconstrained fit would be nonpositive
            passive[j] = true;
            let z = passive_fit(phi, y, &passive);
            if z[j] > 0.0 {
                break Some((j, z));
            }
            passive[j] = false;
            blocked[j] = true;
        };
        let Some((_, mut z)) = entering else { break };

        iterations += 1;
        if iterations > max_iters {
            return Err(Error::NonConvergence {
                solver: "nnls",
                iterations,
                detail: format!("active set did not settle within {max_iters} steps"),
            });
        }

        // inner loop: step back into the feasible region until z > 0 on P
        loop {
            let bad: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= 0.0).collect();
            if bad.is_empty() {
                x = z;
                break;
            }
            let alpha = bad.iter().map(|&i| x[i] / (x[i] - z[i])).fold(f64::INFINITY, f64::min);
            for i in 0..n {
                if passive[i] {
                    x[i] += alpha * (z[i] - x[i]);
                }
            }
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 * (1.0 + norm_inf(&x)) {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
            z = passive_fit(phi, y, &passive);
        }
        w = dual(phi, y, &x);
    }
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(x)
}

/// `w = Φᵀ(y − Φx)`, the negative gradient of the half squared residual.
fn dual(phi: &DenseMatrix, y: &[f64], x: &[f64]) -> Vec<f64> {
    let r = linalg::sub(y, &phi.matvec(x));
    phi.tr_matvec(&r)
}

/// Unconstrained least squares on the passive columns, zero elsewhere.
fn passive_fit(phi: &DenseMatrix, y: &[f64], passive: &[bool]) -> Vec<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = phi.select_columns(&idx);
    let zp = linalg::lstsq(&sub, y).expect("row counts agree");
    let mut z = vec![0.0; passive.len()];
    for (&j, v) in idx.iter().zip(zp) {
        z[j] = v;
    }
    z
}
