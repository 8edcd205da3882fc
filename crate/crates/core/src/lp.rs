//! Dense two-phase simplex for standard-form linear programs
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Pivoting follows Bland's rule throughout, so the method cannot cycle and
//! the returned basis is a deterministic function of the input. The geometry
//! module uses [`phase_one`] for membership tests; the public LP solver lives
//! in [`crate::finite`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, solve_square, DenseMatrix};

/// Pivot elements below this (relative to the largest entry of `A`) are ignored.
pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-one optimum above `PHASE_ONE_TOL * (1 + ‖b‖∞)` means infeasible.
pub const PHASE_ONE_TOL: f64 = 1e-8;
/// Reduced costs recomputed from `A` must be above `-REDUCED_COST_TOL·(1 + ‖c‖∞)`.
const REDUCED_COST_TOL: f64 = 1e-9;
const REFACTOR_ROUNDS: usize = 5;
const REFRESH_EVERY: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Basic column indices, one per non-redundant row, in row order.
    pub basis: Vec<usize>,
    pub objective: f64,
    /// Simplex multipliers `λ` with `B ᵀλ = c_B`; zero for rows found redundant.
    pub duals: Vec<f64>,
    /// For unbounded problems: `d ≥ 0`, `A d = 0`, `cᵀd < 0`.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

struct Tableau {
    /// rows × (ncols + 1); last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Original row index for each tableau row.
    row_origin: Vec<usize>,
    ncols: usize,
    piv_tol: f64,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.t[r][c] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for (v, &pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Rebuilds `B⁻¹[A | b]` from the original data for the current basis.
    /// Returns false if the basis matrix is numerically singular.
    fn refactor(&mut self, a: &DenseMatrix, b: &[f64]) -> bool {
        let k = self.basis.len();
        let n = a.cols();
        let bmat = DenseMatrix::from_fn(k, k, |i, r| a[(self.row_origin[i], self.basis[r])]);
        let mut inv = vec![vec![0.0; k]; k];
        for c in 0..k {
            let mut e = vec![0.0; k];
            e[c] = 1.0;
            let Some(col) = solve_square(&bmat, &e) else {
                return false;
            };
            for r in 0..k {
                inv[r][c] = col[r];
            }
        }
        for (r, row) in self.t.iter_mut().enumerate() {
            // artificial columns are out of play after phase one
            row.iter_mut().for_each(|v| *v = 0.0);
            for (i, &orig) in self.row_origin.iter().enumerate() {
                let f = inv[r][i];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    row[j] += f * a[(orig, j)];
                }
                row[self.ncols] += f * b[orig];
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, row) in self.t.iter_mut().enumerate() {
                row[j] = if i == r { 1.0 } else { 0.0 };
            }
        }
        true
    }

    /// Runs Bland-rule simplex iterations for the given column costs. With
    /// `data`, the tableau is rebuilt from `(A, b)` every `REFRESH_EVERY`
    /// pivots so that drift cannot fake negative reduced costs.
    fn run(
        &mut self,
        cost: &[f64],
        allowed: usize,
        max_iters: usize,
        data: Option<(&DenseMatrix, &[f64])>,
    ) -> Result<PhaseEnd> {
        let cscale = 1.0 + norm_inf(cost);
        let rc_tol = 1e-10 * cscale;
        let start = self.iterations;
        loop {
            if self.iterations - start > max_iters {
                return Err(Error::NonConvergence {
                    solver: "simplex",
                    iterations: self.iterations,
                    detail: "iteration cap reached".into(),
                });
            }
            // Bland: lowest-index column with negative reduced cost.
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let rc = cost[j] - self.t.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                if rc < -rc_tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            // Ratio test; ties broken by the lowest basic variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][j];
                if a <= self.piv_tol {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(PhaseEnd::Unbounded(j)),
                Some((r, _)) => self.pivot(r, j),
            }
            if let Some((a, b)) = data {
                if (self.iterations - start) % REFRESH_EVERY == 0 {
                    self.refactor(a, b);
                }
            }
        }
    }
}

fn iteration_cap(m: usize, n: usize) -> usize {
    200 * (m + n) + 10_000
}

/// Builds the phase-one tableau and drives it to a basic feasible solution of
/// the original columns. Returns `None` when the system is infeasible.
fn feasible_tableau(a: &DenseMatrix, b: &[f64]) -> Result<Option<Tableau>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("A has {m} rows but b has {} entries", b.len())));
    }
    let ascale = a.max_abs().max(1e-300);
    let ncols = n + m;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = 1.0;
        row[ncols] = sign * b[i];
        t.push(row);
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        row_origin: (0..m).collect(),
        ncols,
        piv_tol: PIVOT_TOL * ascale,
        iterations: 0,
    };
    let mut cost = vec![0.0; ncols];
    cost[n..].iter_mut().for_each(|c| *c = 1.0);
    match tab.run(&cost, ncols, iteration_cap(m, n), None)? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded(_) => unreachable!("phase one is bounded below by zero"),
    }
    let infeas: f64 = tab.basis.iter().enumerate().filter(|(_, &bj)| bj >= n).map(|(i, _)| tab.rhs(i).abs()).sum();
    if infeas > PHASE_ONE_TOL * (1.0 + norm_inf(b)) {
        return Ok(None);
    }
    // Drive remaining artificials out of the basis; rows that cannot be
    // pivoted on an original column are redundant and dropped.
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] < n {
            i += 1;
            continue;
        }
        let best = (0..n)
            .filter(|j| !tab.basis.contains(j))
            .map(|j| (j, tab.t[i][j].abs()))
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(a) if a.1 >= cur.1 => Some(a),
                _ => Some(cur),
            });
        match best {
            Some((j, v)) if v > 1e-9 * ascale => {
                tab.pivot(i, j);
                i += 1;
            }
            _ => {
                tab.t.remove(i);
                tab.basis.remove(i);
                tab.row_origin.remove(i);
            }
        }
    }
    Ok(Some(tab))
}

/// Recomputes basic values from the original data, which removes most of the
/// drift accumulated by tableau pivots.
fn refine_basic_solution(a: &DenseMatrix, b: &[f64], tab: &Tableau) -> Vec<f64> {
    let n = a.cols();
    let mut x = vec![0.0; n];
    let bmat = DenseMatrix::from_fn(tab.basis.len(), tab.basis.len(), |i, k| a[(tab.row_origin[i], tab.basis[k])]);
    let rhs: Vec<f64> = tab.row_origin.iter().map(|&r| b[r]).collect();
    match solve_square(&bmat, &rhs) {
        Some(xb) => {
            for (k, &j) in tab.basis.iter().enumerate() {
                x[j] = xb[k];
            }
        }
        None => {
            for (i, &j) in tab.basis.iter().enumerate() {
                x[j] = tab.rhs(i);
            }
        }
    }
    x
}

fn multipliers(a: &DenseMatrix, b: &[f64], c: &[f64], tab: &Tableau) -> Vec<f64> {
    let m = a.rows();
    let k = tab.basis.len();
    let bt = DenseMatrix::from_fn(k, k, |i, r| a[(tab.row_origin[r], tab.basis[i])]);
    let cb: Vec<f64> = tab.basis.iter().map(|&j| c[j]).collect();
    let mut duals = vec![0.0; m];
    if let Some(lam) = solve_square(&bt, &cb) {
        for (r, &orig) in tab.row_origin.iter().enumerate() {
            duals[orig] = lam[r];
        }
    }
    let _ = b;
    duals
}

/// Phase one only: a basic feasible solution of `A x = b, x ≥ 0`, or `None`.
pub fn phase_one(a: &DenseMatrix, b: &[f64]) -> Result<Option<(Vec<f64>, Vec<usize>)>> {
    Ok(feasible_tableau(a, b)?.map(|tab| {
        let x = refine_basic_solution(a, b, &tab);
        (x, tab.basis)
    }))
}

/// Full two-phase simplex.
pub fn simplex(c: &[f64], a: &DenseMatrix, b: &[f64]) -> Result<SimplexOutcome> {
    let (m, n) = a.shape();
    if c.len() != n {
        return Err(Error::DimensionMismatch(format!("A has {n} columns but c has {} entries", c.len())));
    }
    let Some(mut tab) = feasible_tableau(a, b)? else {
        return Ok(SimplexOutcome {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            basis: Vec::new(),
            objective: f64::NAN,
            duals: vec![0.0; m],
            ray: None,
            iterations: 0,
        });
    };
    let mut cost = vec![0.0; tab.ncols];
    cost[..n].copy_from_slice(c);
    let cscale = 1.0 + norm_inf(c);
    let mut end = tab.run(&cost, n, iteration_cap(m, n), Some((a, b)))?;
    // Tableau drift can hide a negative reduced cost on ill-conditioned
    // bases: check against the original data and resume from a fresh
    // factorization if needed.
    for _ in 0..REFACTOR_ROUNDS {
        if !matches!(end, PhaseEnd::Optimal) {
            break;
        }
        let duals = multipliers(a, b, c, &tab);
        let worst = (0..n)
            .filter(|j| !tab.basis.contains(j))
            .map(|j| c[j] - (0..m).map(|i| duals[i] * a[(i, j)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        if worst >= -REDUCED_COST_TOL * cscale || !tab.refactor(a, b) {
            break;
        }
        end = tab.run(&cost, n, iteration_cap(m, n), Some((a, b)))?;
    }
    let x = refine_basic_solution(a, b, &tab);
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    let iterations = tab.iterations;
    match end {
        PhaseEnd::Optimal => Ok(SimplexOutcome {
            status: LpStatus::Optimal,
            duals: multipliers(a, b, c, &tab),
            x,
            basis: tab.basis,
            objective,
            ray: None,
            iterations,
        }),
        PhaseEnd::Unbounded(j) => {
            let mut d = vec![0.0; n];
            d[j] = 1.0;
            for (i, &bj) in tab.basis.iter().enumerate() {
                if bj < n {
                    d[bj] = -tab.t[i][j];
                }
            }
            Ok(SimplexOutcome {
                status: LpStatus::Unbounded,
                x,
                basis: tab.basis,
                objective: f64::NEG_INFINITY,
                duals: vec![0.0; m],
                ray: Some(d),
                iterations,
            })
        }
    }
}
