//! Total-variation minimization of images under disk-average measurements.

mod levels;
mod pgm;

pub use levels::{level_set_report, Level, LevelSetReport, SuperlevelSet, DEFAULT_QUANT_TOL};
pub use pgm::{read_pgm, write_pgm};

use log::{debug, trace};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TvPartial};
use crate::linalg::{norm2, norm_inf, op_norm_estimate, DenseMatrix};
use crate::lp::{self, LpStatus};

/// Row-major image, `values[row * width + col]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image2D {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width * height != values.len() {
            return Err(Error::DimensionMismatch(format!("{width}x{height} image with {} values", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("image values must be finite".into()));
        }
        Ok(Self { width, height, values })
    }

    pub fn constant(width: usize, height: usize, c: f64) -> Self {
        Self { width, height, values: vec![c; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(col, row));
            }
        }
        Self { width, height, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |c, r| self.get(r, c))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { width: self.width, height: self.height, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Disk with center and radius in pixel units; pixel `(col, row)` has its
/// center at `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, col: usize, row: usize) -> bool {
        let dx = col as f64 - self.cx;
        let dy = row as f64 - self.cy;
        dx * dx + dy * dy < self.radius * self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskSet {
    pub disks: Vec<Disk>,
}

impl DiskSet {
    pub fn new(disks: Vec<Disk>) -> Result<Self> {
        for (i, d) in disks.iter().enumerate() {
            if !(d.radius > 0.0) || !d.cx.is_finite() || !d.cy.is_finite() || !d.radius.is_finite() {
                return Err(Error::InvalidInput(format!("disk {i} needs a finite center and positive radius")));
            }
        }
        Ok(Self { disks })
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    /// Pixel indices covered by each disk.
    pub fn members(&self, width: usize, height: usize) -> Result<Vec<Vec<usize>>> {
        self.disks
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut idx = Vec::new();
                let r0 = (d.cy - d.radius).floor().max(0.0) as usize;
                let r1 = ((d.cy + d.radius).ceil().max(0.0) as usize).min(height.saturating_sub(1));
                let c0 = (d.cx - d.radius).floor().max(0.0) as usize;
                let c1 = ((d.cx + d.radius).ceil().max(0.0) as usize).min(width.saturating_sub(1));
                if width > 0 && height > 0 {
                    for row in r0..=r1 {
                        for col in c0..=c1 {
                            if d.contains(col, row) {
                                idx.push(row * width + col);
                            }
                        }
                    }
                }
                if idx.is_empty() {
                    Err(Error::EmptyDisk(i))
                } else {
                    Ok(idx)
                }
            })
            .collect()
    }
}

/// Three-disk layout on a `size x size` image used by the reference
/// experiment, with its measurement vector. Scaled from a 200-pixel design.
pub fn default_layout(size: usize) -> (DiskSet, Vec<f64>) {
    let s = size as f64 / 200.0;
    let disks = [(60.0, 60.0, 25.0), (140.0, 70.0, 20.0), (100.0, 140.0, 30.0)]
        .iter()
        .map(|&(cx, cy, r)| Disk { cx: cx * s, cy: cy * s, radius: r * s })
        .collect();
    (DiskSet { disks }, vec![0.8, -0.5, 0.3])
}

/// Disk means `u ↦ (|Dᵢ|⁻¹ Σ_{p∈Dᵢ} u_p)ᵢ` with precomputed memberships.
#[derive(Clone, Debug)]
pub struct DiskOperator {
    pub width: usize,
    pub height: usize,
    members: Vec<Vec<usize>>,
}

impl DiskOperator {
    pub fn new(disks: &DiskSet, width: usize, height: usize) -> Result<Self> {
        Ok(Self { width, height, members: disks.members(width, height)? })
    }

    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.members.iter().map(|idx| idx.iter().map(|&p| u[p]).sum::<f64>() / idx.len() as f64).collect()
    }

    pub fn adjoint(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.width * self.height];
        self.adjoint_add(z, 1.0, &mut out);
        out
    }

    /// `out += s · Φ*z`.
    fn adjoint_add(&self, z: &[f64], s: f64, out: &mut [f64]) {
        for (idx, &zi) in self.members.iter().zip(z) {
            let w = s * zi / idx.len() as f64;
            for &p in idx {
                out[p] += w;
            }
        }
    }
}

pub fn disk_average_apply(u: &Image2D, disks: &DiskSet) -> Result<Vec<f64>> {
    Ok(DiskOperator::new(disks, u.width, u.height)?.apply(&u.values))
}

pub fn disk_average_adjoint(z: &[f64], disks: &DiskSet, width: usize, height: usize) -> Result<Image2D> {
    if z.len() != disks.len() {
        return Err(Error::DimensionMismatch(format!("{} disks but {} coefficients", disks.len(), z.len())));
    }
    let op = DiskOperator::new(disks, width, height)?;
    Ok(Image2D { width, height, values: op.adjoint(z) })
}

/// Forward differences with replicate boundary, written into `gx`, `gy`.
fn gradient(u: &[f64], w: usize, h: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..h {
        let row = r * w;
        for c in 0..w {
            let p = row + c;
            gx[p] = if c + 1 < w { u[p + 1] - u[p] } else { 0.0 };
            gy[p] = if r + 1 < h { u[p + w] - u[p] } else { 0.0 };
        }
    }
}

/// `out += s · ∇ᵀ(px, py)`.
fn gradient_adjoint_add(px: &[f64], py: &[f64], w: usize, h: usize, s: f64, out: &mut [f64]) {
    for r in 0..h {
        let row = r * w;
        for c in 0..w {
            let p = row + c;
            if c + 1 < w {
                out[p] -= s * px[p];
                out[p + 1] += s * px[p];
            }
            if r + 1 < h {
                out[p] -= s * py[p];
                out[p + w] += s * py[p];
            }
        }
    }
}

fn tv_of(u: &[f64], w: usize, h: usize) -> f64 {
    let mut gx = vec![0.0; u.len()];
    let mut gy = vec![0.0; u.len()];
    gradient(u, w, h, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// `K u = (∂ₓu, ∂ᵧu, √|Dᵢ|·(Φu)ᵢ)`, the operator split by the primal-dual
/// solver. Output length is `2·w·h + m`.
#[derive(Clone, Debug)]
pub struct GradientDiskOperator {
    pub disks: DiskOperator,
    /// `√|Dᵢ|`.
    pub weights: Vec<f64>,
}

impl GradientDiskOperator {
    pub fn new(disks: &DiskSet, width: usize, height: usize) -> Result<Self> {
        let disks = DiskOperator::new(disks, width, height)?;
        let weights = disks.counts().iter().map(|&c| (c as f64).sqrt()).collect();
        Ok(Self { disks, weights })
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let (w, h) = (self.disks.width, self.disks.height);
        let n = w * h;
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        gradient(u, w, h, &mut gx, &mut gy);
        let phi = self.disks.apply(u);
        gx.extend(gy);
        gx.extend(phi.iter().zip(&self.weights).map(|(v, s)| v * s));
        gx
    }

    pub fn adjoint(&self, z: &[f64]) -> Vec<f64> {
        let (w, h) = (self.disks.width, self.disks.height);
        let n = w * h;
        let mut out = vec![0.0; n];
        gradient_adjoint_add(&z[..n], &z[n..2 * n], w, h, 1.0, &mut out);
        let q: Vec<f64> = z[2 * n..].iter().zip(&self.weights).map(|(v, s)| v * s).collect();
        self.disks.adjoint_add(&q, 1.0, &mut out);
        out
    }
}

/// Isotropic TV `Σ_p |∇u(p)|₂` with forward differences.
pub fn discrete_tv(u: &Image2D) -> f64 {
    tv_of(&u.values, u.width, u.height)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdConfig {
    pub max_iters: usize,
    /// Primal step; `None` picks `0.99/‖K‖`.
    pub tau: Option<f64>,
    /// Dual step; `None` picks `0.99/‖K‖`.
    pub sigma: Option<f64>,
    pub theta: f64,
    /// Bound on `‖Φu − y‖∞`; `None` means `1e-4·‖y‖∞`.
    pub tol_constraint: Option<f64>,
    pub tol_change: f64,
    pub log_every: usize,
    /// Seed of the power iteration estimating `‖K‖`.
    pub seed: u64,
}

impl Default for PdConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tau: None,
            sigma: None,
            theta: 1.0,
            tol_constraint: None,
            tol_change: 1e-7,
            log_every: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub tv: f64,
    pub residual: f64,
    pub change: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub entries: Vec<TraceEntry>,
    pub converged: bool,
    pub tau: f64,
    pub sigma: f64,
    pub op_norm: f64,
    iterations: usize,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }
}

/// `min TV(u) s.t. Φu = y` by the primal-dual iteration on `K = (∇, Φ̃)`.
///
/// `Φ̃` rescales row `i` of the disk-mean operator by `√|Dᵢ|` (data scaled
/// alike), which leaves the constraint set unchanged and gives every
/// measurement row unit norm. The gradient dual is projected onto pointwise
/// unit balls and the measurement dual takes the step `q += σ(Φ̃ū − ỹ)`.
/// Iterations start from the least-squares constant image.
pub fn chambolle_pock_tv_solve(
    disks: &DiskSet,
    y: &[f64],
    size: (usize, usize),
    cfg: &PdConfig,
) -> Result<(Image2D, ConvergenceTrace)> {
    let (w, h) = size;
    if y.len() != disks.len() {
        return Err(Error::DimensionMismatch(format!("{} disks but {} measurements", disks.len(), y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("measurements must be finite".into()));
    }
    let k = GradientDiskOperator::new(disks, w, h)?;
    let op = &k.disks;
    let weights = &k.weights;
    let n = w * h;
    let y_scaled: Vec<f64> = y.iter().zip(weights).map(|(v, s)| v * s).collect();

    let op_norm = 1.01 * op_norm_estimate(|u| k.apply(u), |z| k.adjoint(z), n, 100, cfg.seed);
    let (tau, sigma) = match (cfg.tau, cfg.sigma) {
        (None, None) => (0.99 / op_norm, 0.99 / op_norm),
        (Some(t), Some(s)) => (t, s),
        (Some(t), None) => (t, 0.99 / (t * op_norm * op_norm)),
        (None, Some(s)) => (0.99 / (s * op_norm * op_norm), s),
    };
    if !(tau > 0.0 && sigma > 0.0) || tau * sigma * op_norm * op_norm > 1.0 {
        return Err(Error::InvalidInput(format!(
            "step sizes tau={tau:.3e}, sigma={sigma:.3e} violate tau*sigma*|K|^2 <= 1 with |K| = {op_norm:.4}"
        )));
    }
    let tol_constraint = cfg.tol_constraint.unwrap_or(1e-4 * norm_inf(y));
    debug!("tv2d: {w}x{h}, m = {}, |K| = {op_norm:.4}, tau = {tau:.4e}, sigma = {sigma:.4e}", y.len());

    // start from the constant image closest to the data; TV does not see it
    let counts = op.counts();
    let total: usize = counts.iter().sum();
    let c0 = counts.iter().zip(y).map(|(&c, v)| c as f64 * v).sum::<f64>() / total as f64;
    let mut u = vec![c0; n];
    let mut u_bar = u.clone();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut q = vec![0.0; y.len()];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut u_new = vec![0.0; n];
    let mut trace = ConvergenceTrace { tau, sigma, op_norm, ..Default::default() };

    for it in 1..=cfg.max_iters {
        // dual step
        gradient(&u_bar, w, h, &mut gx, &mut gy);
        for p in 0..n {
            let a = px[p] + sigma * gx[p];
            let b = py[p] + sigma * gy[p];
            let norm = a.hypot(b).max(1.0);
            px[p] = a / norm;
            py[p] = b / norm;
        }
        let phi_bar = op.apply(&u_bar);
        for i in 0..q.len() {
            q[i] += sigma * (phi_bar[i] * weights[i] - y_scaled[i]);
        }

        // primal step
        u_new.copy_from_slice(&u);
        gradient_adjoint_add(&px, &py, w, h, -tau, &mut u_new);
        let qs: Vec<f64> = q.iter().zip(weights).map(|(v, s)| v * s).collect();
        op.adjoint_add(&qs, -tau, &mut u_new);

        let mut diff = 0.0;
        for p in 0..n {
            let d = u_new[p] - u[p];
            diff += d * d;
            u_bar[p] = u_new[p] + cfg.theta * d;
        }
        std::mem::swap(&mut u, &mut u_new);
        let change = diff.sqrt() / norm2(&u).max(f64::MIN_POSITIVE);
        let residual = norm_inf(&op.apply(&u).iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        let done = residual <= tol_constraint && (change <= cfg.tol_change || diff == 0.0);

        if done || (cfg.log_every > 0 && it % cfg.log_every == 0) || it == cfg.max_iters {
            let entry = TraceEntry { iteration: it, tv: tv_of(&u, w, h), residual, change };
            trace!("tv2d iter {it}: tv {:.6e} residual {residual:.3e} change {change:.3e}", entry.tv);
            trace.entries.push(entry);
        }
        trace.iterations = it;
        if done {
            trace.converged = true;
            return Ok((Image2D { width: w, height: h, values: u }, trace));
        }
    }
    Err(Error::TvNonConvergence(Box::new(TvPartial { image: Image2D { width: w, height: h, values: u }, trace })))
}

/// Clustering tolerance used to read nested sets off a solver iterate.
pub const PURIFY_QUANT_TOL: f64 = 1e-3;

/// Moves a near-optimal image to a staircase with at most `m + 1` levels.
///
/// The image is cut into nested superlevel sets `F₁ ⊃ F₂ ⊃ …` at clusters
/// `quant_tol` apart and then re-weighted by the LP
/// `min Σₖ jₖ·TV(1_{Fₖ}) s.t. c·Φ1 + Σₖ jₖ·Φ1_{Fₖ} = y, jₖ ≥ 0`, whose basic
/// solution keeps at most `m` of the variables. Every set of the result is a
/// superlevel set of the input, and its TV is at most the LP value.
pub fn purify_levels(u: &Image2D, disks: &DiskSet, y: &[f64], quant_tol: f64) -> Result<Image2D> {
    let op = DiskOperator::new(disks, u.width, u.height)?;
    if y.len() != op.m() {
        return Err(Error::DimensionMismatch(format!("{} disks but {} measurements", op.m(), y.len())));
    }
    let rep = level_set_report(u, quant_tol);
    let sets: Vec<Vec<f64>> = (0..rep.levels.len().saturating_sub(1))
        .map(|k| rep.superlevel_mask(k).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
        .collect();
    let m = op.m();
    let mut columns = vec![vec![1.0; m], vec![-1.0; m]];
    let mut cost = vec![0.0, 0.0];
    for f in &sets {
        columns.push(op.apply(f));
        cost.push(tv_of(f, u.width, u.height));
    }
    let a = DenseMatrix::from_columns(&columns, m);
    let out = lp::simplex(&cost, &a, y)?;
    if out.status != LpStatus::Optimal {
        return Err(Error::Infeasible("no staircase on these level sets matches the data".into()));
    }
    let mut values = vec![out.x[0] - out.x[1]; u.len()];
    for (f, &jump) in sets.iter().zip(&out.x[2..]) {
        if jump > 0.0 {
            for (v, &ind) in values.iter_mut().zip(f) {
                *v += jump * ind;
            }
        }
    }
    debug!("purify: {} candidate sets, lp value {:.6e}", sets.len(), out.objective);
    Ok(Image2D { width: u.width, height: u.height, values })
}

/// Output of [`tv_staircase_solve`].
#[derive(Clone, Debug)]
pub struct StaircaseRun {
    /// Last primal-dual iterate.
    pub raw: Image2D,
    /// Staircase from [`purify_levels`] on the raw iterate.
    pub image: Image2D,
    pub trace: ConvergenceTrace,
    /// `‖Φu − y‖∞` of the raw iterate.
    pub raw_residual: f64,
}

/// Primal-dual solve followed by [`purify_levels`].
///
/// Running out of iterations is accepted as long as the last iterate meets
/// the constraint tolerance (`trace.converged` then stays false). Otherwise
/// the solver's `TvNonConvergence` error is passed through.
pub fn tv_staircase_solve(disks: &DiskSet, y: &[f64], size: (usize, usize), cfg: &PdConfig) -> Result<StaircaseRun> {
    let (raw, trace) = match chambolle_pock_tv_solve(disks, y, size, cfg) {
        Ok(out) => out,
        Err(Error::TvNonConvergence(partial)) => {
            let tol = cfg.tol_constraint.unwrap_or(1e-4 * norm_inf(y));
            let met = partial.trace.last().is_some_and(|e| e.iteration == partial.trace.iterations() && e.residual <= tol);
            if !met {
                return Err(Error::TvNonConvergence(partial));
            }
            debug!("tv2d: iteration limit reached with the constraint met, purifying the last iterate");
            (partial.image, partial.trace)
        }
        Err(e) => return Err(e),
    };
    let raw_residual = residual_inf(&raw, disks, y)?;
    let image = purify_levels(&raw, disks, y, PURIFY_QUANT_TOL)?;
    Ok(StaircaseRun { raw, image, trace, raw_residual })
}

fn residual_inf(u: &Image2D, disks: &DiskSet, y: &[f64]) -> Result<f64> {
    let fit = disk_average_apply(u, disks)?;
    Ok(norm_inf(&fit.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_disk() -> DiskSet {
        DiskSet::new(vec![Disk { cx: 10.0, cy: 12.0, radius: 5.0 }]).unwrap()
    }

    #[test]
    fn constant_image_means() {
        let disks = default_layout(64).0;
        let y = disk_average_apply(&Image2D::constant(64, 64, 2.5), &disks).unwrap();
        assert!(y.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn indicator_mean_is_one() {
        let disks = one_disk();
        let members = disks.members(32, 32).unwrap();
        let mut u = Image2D::constant(32, 32, 0.0);
        for &p in &members[0] {
            u.values[p] = 1.0;
        }
        assert!((disk_average_apply(&u, &disks).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disk_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let disks = default_layout(50).0;
        let u = Image2D::from_fn(50, 50, |_, _| rng.gen_range(-1.0..1.0));
        let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs: f64 = disk_average_apply(&u, &disks).unwrap().iter().zip(&z).map(|(a, b)| a * b).sum();
        let adj = disk_average_adjoint(&z, &disks, 50, 50).unwrap();
        let rhs: f64 = u.values.iter().zip(&adj.values).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gradient_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (w, h) = (7, 5);
        let u: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let px: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let py: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        gradient(&u, w, h, &mut gx, &mut gy);
        let lhs: f64 = (0..w * h).map(|p| gx[p] * px[p] + gy[p] * py[p]).sum();
        let mut adj = vec![0.0; w * h];
        gradient_adjoint_add(&px, &py, w, h, 1.0, &mut adj);
        let rhs: f64 = u.iter().zip(&adj).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn empty_disk() {
        let disks = DiskSet::new(vec![Disk { cx: 100.0, cy: 100.0, radius: 1.0 }]).unwrap();
        assert!(matches!(disk_average_apply(&Image2D::constant(10, 10, 0.0), &disks), Err(Error::EmptyDisk(0))));
    }

    #[test]
    fn tv_values() {
        assert_eq!(discrete_tv(&Image2D::constant(5, 4, 3.0)), 0.0);
        assert_eq!(discrete_tv(&Image2D::new(2, 1, vec![0.0, 0.7]).unwrap()), 0.7);
        let r = 6;
        let sq = Image2D::from_fn(20, 20, |c, row| if (5..5 + r).contains(&c) && (5..5 + r).contains(&row) { 1.0 } else { 0.0 });
        let expected = 4.0 * r as f64 - 2.0 + 2f64.sqrt();
        assert!((discrete_tv(&sq) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero() {
        let (u, trace) = chambolle_pock_tv_solve(&one_disk(), &[0.0], (24, 24), &PdConfig::default()).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
        assert!(trace.converged);
    }

    #[test]
    fn purify_snaps_blurred_steps() {
        let (disks, y) = default_layout(48);
        let run = tv_staircase_solve(&disks, &y, (48, 48), &PdConfig::default()).unwrap();
        assert!(run.raw_residual <= 1e-4 * 0.8);
        let fit = disk_average_apply(&run.image, &disks).unwrap();
        assert!(fit.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-10));
        let rep = level_set_report(&run.image, 0.0);
        assert!(rep.level_count() <= y.len() + 1);
        assert!(discrete_tv(&run.image) <= discrete_tv(&run.raw) * 1.1);
    }

    #[test]
    fn staircase_reports_unmet_constraint() {
        let (disks, y) = default_layout(48);
        let cfg = PdConfig { max_iters: 5, ..Default::default() };
        assert!(matches!(tv_staircase_solve(&disks, &y, (48, 48), &cfg), Err(Error::TvNonConvergence(_))));
    }

    #[test]
    fn rejects_oversized_steps() {
        let cfg = PdConfig { tau: Some(1.0), sigma: Some(1.0), ..Default::default() };
        assert!(matches!(chambolle_pock_tv_solve(&one_disk(), &[1.0], (24, 24), &cfg), Err(Error::InvalidInput(_))));
    }
}
