//! Measures on `[0, 1)`: minimal total variation under moment constraints and
//! the nonnegative moment LP, both solved on a uniform grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm_inf, DenseMatrix};
use crate::lp::{self, LpStatus};

pub const DEFAULT_GRID: usize = 512;

/// Finite sum of Dirac masses `Σ aᵢ δ_{xᵢ}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    /// `(location, amplitude)` pairs.
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, a) in &atoms {
            if !(0.0..1.0).contains(&x) || !a.is_finite() {
                return Err(Error::InvalidInput(format!("atom ({x}, {a}) outside [0,1) or not finite")));
            }
        }
        Ok(Self { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, a)| a.abs()).sum()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|&(x, _)| x).collect()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.atoms.iter().map(|&(_, a)| a).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Trigonometric,
    Monomial,
    Custom,
}

type BasisFn = dyn Fn(usize, f64) -> f64 + Send + Sync;

/// Test functions `φ₀, …, φ_{m-1}` on `[0, 1)`.
#[derive(Clone)]
pub struct MomentSystem {
    kind: MomentKind,
    m: usize,
    eval: Arc<BasisFn>,
}

impl fmt::Debug for MomentSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentSystem").field("kind", &self.kind).field("m", &self.m).finish()
    }
}

impl MomentSystem {
    /// `1, cos 2πx, sin 2πx, cos 4πx, sin 4πx, …` truncated to `m` terms.
    pub fn trigonometric(m: usize) -> Result<Self> {
        Self::build(MomentKind::Trigonometric, m, Arc::new(trig))
    }

    /// `1, x, x², …, x^{m-1}`.
    pub fn monomial(m: usize) -> Result<Self> {
        Self::build(MomentKind::Monomial, m, Arc::new(|i, x: f64| x.powi(i as i32)))
    }

    pub fn custom(m: usize, eval: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::build(MomentKind::Custom, m, Arc::new(eval))
    }

    fn build(kind: MomentKind, m: usize, eval: Arc<BasisFn>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("a moment system needs at least one function".into()));
        }
        Ok(Self { kind, m, eval })
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        (self.eval)(i, x)
    }

    /// `(φᵢ(x))ᵢ`.
    pub fn column(&self, x: f64) -> Vec<f64> {
        (0..self.m).map(|i| self.eval(i, x)).collect()
    }

    /// `m x len(xs)` matrix of evaluations.
    pub fn matrix(&self, xs: &[f64]) -> Result<DenseMatrix> {
        let out = DenseMatrix::from_fn(self.m, xs.len(), |i, j| self.eval(i, xs[j]));
        if !out.is_finite() {
            return Err(Error::InvalidInput("basis evaluation is not finite".into()));
        }
        Ok(out)
    }
}

fn trig(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let k = ((i + 1) / 2) as f64;
    if i % 2 == 1 {
        (2.0 * PI * k * x).cos()
    } else {
        (2.0 * PI * k * x).sin()
    }
}

pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

/// `(Σⱼ aⱼ φᵢ(xⱼ))ᵢ`.
pub fn moments_of(mu: &DiscreteMeasure, sys: &MomentSystem) -> Vec<f64> {
    let mut out = vec![0.0; sys.m()];
    for &(x, a) in &mu.atoms {
        for (i, o) in out.iter_mut().enumerate() {
            *o += a * sys.eval(i, x);
        }
    }
    out
}

/// Coalesces runs of same-sign atoms whose neighbours are within `radius`
/// into their amplitude-weighted centroid, then drops amplitudes below
/// `1e-10·TV`. Output is sorted by location.
pub fn merge_atoms(mu: &DiscreteMeasure, radius: f64) -> DiscreteMeasure {
    let mut atoms: Vec<(f64, f64)> = mu.atoms.iter().copied().filter(|&(_, a)| a != 0.0).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    // (weighted location sum, amplitude, last location)
    let mut run: Option<(f64, f64, f64)> = None;
    for (x, a) in atoms {
        match run {
            Some((sx, sa, last)) if radius > 0.0 && x - last <= radius && sa.signum() == a.signum() => {
                run = Some((sx + a * x, sa + a, x));
            }
            Some((sx, sa, _)) => {
                out.push((sx / sa, sa));
                run = Some((a * x, a, x));
            }
            None => run = Some((a * x, a, x)),
        }
    }
    if let Some((sx, sa, _)) = run {
        out.push((sx / sa, sa));
    }
    let tv: f64 = out.iter().map(|(_, a)| a.abs()).sum();
    out.retain(|(_, a)| a.abs() >= 1e-10 * tv);
    DiscreteMeasure { atoms: out }
}

/// Result of a grid measure problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureSolution {
    /// Returned measure, after merging when merging kept the moments exact.
    pub measure: DiscreteMeasure,
    /// Basic solution of the grid LP before merging.
    pub grid_measure: DiscreteMeasure,
    pub objective: f64,
    /// Simplex multipliers of the moment equalities.
    pub duals: Vec<f64>,
    pub moment_residual: f64,
    pub grid_n: usize,
}

impl MeasureSolution {
    /// `max_j |Σᵢ λᵢ φᵢ(xⱼ)|` over the grid.
    pub fn certificate_sup(&self, sys: &MomentSystem) -> f64 {
        grid(self.grid_n)
            .into_iter()
            .map(|x| linalg::dot(&self.duals, &sys.column(x)).abs())
            .fold(0.0, f64::max)
    }
}

fn check_grid(sys: &MomentSystem, y: &[f64], grid_n: usize) -> Result<()> {
    if y.len() != sys.m() {
        return Err(Error::DimensionMismatch(format!("{} moments but {} data values", sys.m(), y.len())));
    }
    if grid_n < sys.m() {
        return Err(Error::InvalidInput(format!("grid of {grid_n} points is coarser than m = {}", sys.m())));
    }
    Ok(())
}

/// Relative amplitude below which an atom is dropped before a refit.
const PRUNE_TOL: f64 = 1e-6;

/// Accepted moment error of a refitted measure.
fn moment_tol(y: &[f64]) -> f64 {
    1e-9 * norm_inf(y).max(1.0)
}

/// `min |μ|([0,1)) s.t. ∫φᵢ dμ = yᵢ` over measures on the grid `j/grid_n`.
///
/// The grid LP in `a = a⁺ − a⁻` is solved by simplex, so at most `m` grid
/// amplitudes are nonzero. Neighbouring same-sign atoms within `2/grid_n` are
/// then merged and their amplitudes refitted, and atoms below `1e-6·TV` are
/// dropped with another refit. Each step is kept only if the measure still
/// matches the moments and the total variation does not rise.
pub fn beurling_solve(sys: &MomentSystem, y: &[f64], grid_n: usize) -> Result<MeasureSolution> {
    check_grid(sys, y, grid_n)?;
    let xs = grid(grid_n);
    let phi = sys.matrix(&xs)?;
    let a = phi.hstack(&phi.scale(-1.0));
    let out = lp::simplex(&vec![1.0; 2 * grid_n], &a, y)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("moment data not reachable on the grid".into())),
        LpStatus::Unbounded => unreachable!("total variation is bounded below"),
    }
    let atoms: Vec<(f64, f64)> = (0..grid_n)
        .map(|j| (xs[j], out.x[j] - out.x[grid_n + j]))
        .filter(|&(_, a)| a != 0.0)
        .collect();
    let grid_measure = DiscreteMeasure { atoms };

    let mut measure = grid_measure.clone();
    let merged = merge_atoms(&grid_measure, 2.0 / grid_n as f64);
    if merged.len() < grid_measure.len() {
        if let Some(refit) = refit_amplitudes(&merged, sys, y) {
            if refit.total_variation() <= grid_measure.total_variation() * (1.0 + 1e-12) {
                measure = refit;
            }
        }
    }
    // Clustered nodes give nearly singular bases, where the LP can return
    // small alternating amplitudes next to a cheaper exact fit.
    let floor = PRUNE_TOL * measure.total_variation();
    let kept = DiscreteMeasure { atoms: measure.atoms.iter().copied().filter(|a| a.1.abs() >= floor).collect() };
    if !kept.is_empty() && kept.len() < measure.len() {
        if let Some(refit) = refit_amplitudes(&kept, sys, y) {
            if refit.total_variation() <= measure.total_variation() {
                measure = refit;
            }
        }
    }
    let moment_residual = norm_inf(&linalg::sub(&moments_of(&measure, sys), y));
    Ok(MeasureSolution {
        objective: measure.total_variation(),
        measure,
        grid_measure,
        duals: out.duals,
        moment_residual,
        grid_n,
    })
}

/// Least-squares amplitudes on fixed locations, if they reproduce `y` and
/// keep every sign.
fn refit_amplitudes(mu: &DiscreteMeasure, sys: &MomentSystem, y: &[f64]) -> Option<DiscreteMeasure> {
    let phi = sys.matrix(&mu.locations()).ok()?;
    let amps = linalg::lstsq(&phi, y).ok()?;
    if amps.iter().zip(&mu.atoms).any(|(n, (_, o))| n * o <= 0.0) {
        return None;
    }
    let out = DiscreteMeasure { atoms: mu.locations().into_iter().zip(amps).collect() };
    (norm_inf(&linalg::sub(&moments_of(&out, sys), y)) <= moment_tol(y)).then_some(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MomentLpOutcome {
    Optimal(MeasureSolution),
    /// A nonnegative grid measure with zero moments and negative cost.
    Unbounded { ray: DiscreteMeasure },
}

/// `min ∫ψ dμ s.t. ∫φᵢ dμ = yᵢ, μ ≥ 0` over grid measures; the basic optimal
/// solution has at most `m` atoms. Atoms are not merged since moving them
/// would change the cost.
pub fn moment_lp_solve(
    psi: &dyn Fn(f64) -> f64,
    sys: &MomentSystem,
    y: &[f64],
    grid_n: usize,
) -> Result<MomentLpOutcome> {
    check_grid(sys, y, grid_n)?;
    let xs = grid(grid_n);
    let phi = sys.matrix(&xs)?;
    let cost: Vec<f64> = xs.iter().map(|&x| psi(x)).collect();
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("cost evaluation is not finite".into()));
    }
    let out = lp::simplex(&cost, &phi, y)?;
    match out.status {
        LpStatus::Infeasible => Err(Error::Infeasible("no nonnegative grid measure has these moments".into())),
        LpStatus::Unbounded => {
            let ray = out.ray.expect("unbounded outcome carries a ray");
            let atoms = (0..grid_n).filter(|&j| ray[j] > 0.0).map(|j| (xs[j], ray[j])).collect();
            Ok(MomentLpOutcome::Unbounded { ray: DiscreteMeasure { atoms } })
        }
        LpStatus::Optimal => {
            let atoms: Vec<(f64, f64)> = (0..grid_n).filter(|&j| out.x[j] > 0.0).map(|j| (xs[j], out.x[j])).collect();
            let measure = DiscreteMeasure { atoms };
            let moment_residual = norm_inf(&linalg::sub(&moments_of(&measure, sys), y));
            Ok(MomentLpOutcome::Optimal(MeasureSolution {
                objective: out.objective,
                grid_measure: measure.clone(),
                measure,
                duals: out.duals,
                moment_residual,
                grid_n,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_moment() {
        let sys = MomentSystem::trigonometric(1).unwrap();
        let sol = beurling_solve(&sys, &[1.0], 64).unwrap();
        assert_eq!(sol.measure.len(), 1);
        assert!((sol.measure.atoms[0].1 - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_constraint_on_grid() {
        let sys = MomentSystem::monomial(2).unwrap();
        let sol = beurling_solve(&sys, &[1.0, 0.5], 64).unwrap();
        assert_eq!(sol.measure.len(), 1);
        assert!((sol.measure.atoms[0].0 - 0.5).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trig_two_spikes() {
        let sys = MomentSystem::trigonometric(4).unwrap();
        let mu0 = DiscreteMeasure::new(vec![(0.25, 1.0), (0.75, 1.0)]).unwrap();
        let y = moments_of(&mu0, &sys);
        let sol = beurling_solve(&sys, &y, 512).unwrap();
        assert!(sol.measure.len() <= 4);
        assert!(sol.moment_residual <= 1e-8);
        assert!(sol.certificate_sup(&sys) <= 1.0 + 1e-6);
    }

    #[test]
    fn moments() {
        let sys = MomentSystem::trigonometric(3).unwrap();
        assert_eq!(moments_of(&DiscreteMeasure::default(), &sys), vec![0.0; 3]);
        let one = MomentSystem::monomial(1).unwrap();
        assert_eq!(moments_of(&DiscreteMeasure::new(vec![(0.5, 1.0)]).unwrap(), &one), vec![1.0]);
    }

    #[test]
    fn merging() {
        let mu = DiscreteMeasure::new(vec![(0.5, 0.6), (0.502, 0.4)]).unwrap();
        let m = merge_atoms(&mu, 0.01);
        assert_eq!(m.len(), 1);
        assert!((m.atoms[0].0 - 0.5008).abs() < 1e-12);
        assert!((m.atoms[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(merge_atoms(&mu, 0.0), mu);
        let opposite = DiscreteMeasure::new(vec![(0.5, 0.6), (0.502, -0.4)]).unwrap();
        assert_eq!(merge_atoms(&opposite, 0.01).len(), 2);
    }

    #[test]
    fn moment_lp() {
        let sys = MomentSystem::monomial(1).unwrap();
        let MomentLpOutcome::Optimal(sol) = moment_lp_solve(&|_| 0.0, &sys, &[1.0], 32).unwrap() else { panic!() };
        assert_eq!(sol.measure.len(), 1);
        assert!((sol.measure.atoms[0].1 - 1.0).abs() < 1e-12);

        let MomentLpOutcome::Optimal(sol) = moment_lp_solve(&|x| x, &sys, &[1.0], 32).unwrap() else { panic!() };
        assert_eq!(sol.measure.atoms, vec![(0.0, 1.0)]);
    }

    #[test]
    fn moment_lp_unbounded() {
        // ∫x dμ says nothing about mass at 0, which the cost rewards
        let sys = MomentSystem::custom(1, |_, x| x).unwrap();
        match moment_lp_solve(&|x| if x == 0.0 { -1.0 } else { 0.0 }, &sys, &[0.5], 8).unwrap() {
            MomentLpOutcome::Unbounded { ray } => assert_eq!(ray.atoms[0].0, 0.0),
            other => panic!("{other:?}"),
        }
    }
}
