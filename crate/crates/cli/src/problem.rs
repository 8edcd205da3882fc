//! Problem files: one JSON document per inverse problem.

use repkit_core::audit::RegularizerSpec;
use repkit_core::finite::{MatrixProblem, SplittingConfig};
use repkit_core::measure::{MomentSystem, DEFAULT_GRID};
use repkit_core::tv2d::{Disk, DiskSet, PdConfig};
use repkit_core::DenseMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    NonnegCone,
    LpEpigraph,
    L1Analysis,
    Nuclear,
    PsdCone,
    MeasureTv,
    MeasureNonneg,
    Tv2d,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Matrix(Vec<Vec<f64>>),
    Disks(DiskLayout),
    Moments(MomentSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskLayout {
    pub disks: Vec<Disk>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentFamily {
    Trigonometric,
    Monomial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub moments: MomentFamily,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSpec {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    Square(usize),
    Rect([usize; 2]),
}

/// Optional solver settings; anything unset keeps the solver default.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub max_iters: Option<usize>,
    /// Feasibility tolerance (`eps_feas` or the TV constraint tolerance).
    pub tol: Option<f64>,
    pub eps_gap: Option<f64>,
    pub gamma: Option<f64>,
    pub relaxation: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    pub tol_change: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: Kind,
    #[serde(default)]
    pub phi: Option<PhiSpec>,
    pub y: Vec<f64>,
    #[serde(default, rename = "L")]
    pub l: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub size: Option<SizeSpec>,
    #[serde(default)]
    pub cost: Option<CostSpec>,
    #[serde(default)]
    pub measurement_maps: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub solver: Option<SolverOverrides>,
}

/// A validated problem ready for dispatch.
pub enum Problem {
    NonnegCone { phi: DenseMatrix, y: Vec<f64> },
    LpEpigraph { phi: DenseMatrix, y: Vec<f64>, cost: Vec<f64> },
    L1Analysis { phi: DenseMatrix, y: Vec<f64>, l: DenseMatrix },
    Nuclear { prob: MatrixProblem, cfg: SplittingConfig },
    PsdCone { prob: MatrixProblem, cost: Option<DenseMatrix>, cfg: SplittingConfig },
    /// `cost` holds polynomial coefficients `c₀ + c₁x + …` of `ψ`.
    Measure { nonneg: bool, sys: MomentSystem, y: Vec<f64>, grid_n: usize, cost: Vec<f64> },
    Tv2d { disks: DiskSet, y: Vec<f64>, size: (usize, usize), cfg: PdConfig },
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlagOverrides {
    pub iters: Option<usize>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub seed: u64,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Problem(msg.into())
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> CliResult<DenseMatrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(bad(format!("{what} must be a non-empty matrix")));
    }
    let m = DenseMatrix::from_rows(rows).map_err(|e| bad(format!("{what}: {e}")))?;
    if !m.is_finite() {
        return Err(bad(format!("{what} has non-finite entries")));
    }
    Ok(m)
}

impl ProblemFile {
    fn dense_phi(&self) -> CliResult<DenseMatrix> {
        match &self.phi {
            Some(PhiSpec::Matrix(rows)) => {
                let phi = matrix(rows, "phi")?;
                if phi.rows() != self.y.len() {
                    return Err(bad(format!("phi has {} rows but y has {} entries", phi.rows(), self.y.len())));
                }
                Ok(phi)
            }
            _ => Err(bad(format!("kind {:?} needs phi as a dense matrix", self.kind))),
        }
    }

    fn matrix_problem(&self) -> CliResult<MatrixProblem> {
        if self.phi.is_some() {
            return Err(bad("matrix kinds take measurement_maps instead of phi"));
        }
        let maps = self.measurement_maps.as_ref().ok_or_else(|| bad("missing measurement_maps"))?;
        let maps = maps
            .iter()
            .enumerate()
            .map(|(i, a)| matrix(a, &format!("measurement_maps[{i}]")))
            .collect::<CliResult<Vec<_>>>()?;
        let shape = maps.first().map(|a| a.shape()).ok_or_else(|| bad("measurement_maps is empty"))?;
        Ok(MatrixProblem::new(maps, self.y.clone(), shape)?)
    }

    fn splitting(&self, flags: &FlagOverrides) -> SplittingConfig {
        let s = self.solver.clone().unwrap_or_default();
        let mut cfg = SplittingConfig::default();
        if let Some(v) = flags.iters.or(s.max_iters) {
            cfg.max_iters = v;
        }
        if let Some(v) = flags.tol.or(s.tol) {
            cfg.eps_feas = v;
        }
        if let Some(v) = s.eps_gap {
            cfg.eps_gap = v;
        }
        if let Some(v) = s.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = s.relaxation {
            cfg.relaxation = v;
        }
        cfg
    }

    /// Fields other than `kind`, `y` and `solver` that this kind accepts.
    fn allowed(&self) -> &'static [&'static str] {
        match self.kind {
            Kind::NonnegCone => &["phi"],
            Kind::LpEpigraph => &["phi", "cost"],
            Kind::L1Analysis => &["phi", "L"],
            Kind::Nuclear => &["measurement_maps"],
            Kind::PsdCone => &["measurement_maps", "cost"],
            Kind::MeasureTv => &["phi", "grid_n"],
            Kind::MeasureNonneg => &["phi", "grid_n", "cost"],
            Kind::Tv2d => &["phi", "size"],
        }
    }

    pub fn validate(&self, flags: &FlagOverrides) -> CliResult<Problem> {
        let present = [
            ("phi", self.phi.is_some()),
            ("L", self.l.is_some()),
            ("grid_n", self.grid_n.is_some()),
            ("size", self.size.is_some()),
            ("cost", self.cost.is_some()),
            ("measurement_maps", self.measurement_maps.is_some()),
        ];
        for (name, given) in present {
            if given && !self.allowed().contains(&name) {
                return Err(bad(format!("field {name:?} does not apply to kind {:?}", self.kind)));
            }
        }
        if self.y.is_empty() {
            return Err(bad("y must not be empty"));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(bad("y has non-finite entries"));
        }
        let y = self.y.clone();
        let vector_cost = |len: usize| -> CliResult<Vec<f64>> {
            match &self.cost {
                Some(CostSpec::Vector(c)) if c.len() == len || len == 0 => Ok(c.clone()),
                Some(CostSpec::Vector(c)) => Err(bad(format!("cost has {} entries, expected {len}", c.len()))),
                Some(CostSpec::Matrix(_)) => Err(bad("cost must be a vector for this kind")),
                None => Err(bad("missing cost")),
            }
        };
        Ok(match self.kind {
            Kind::NonnegCone => Problem::NonnegCone { phi: self.dense_phi()?, y },
            Kind::LpEpigraph => {
                let phi = self.dense_phi()?;
                let cost = vector_cost(phi.cols())?;
                Problem::LpEpigraph { phi, y, cost }
            }
            Kind::L1Analysis => {
                let phi = self.dense_phi()?;
                let l = matrix(self.l.as_ref().ok_or_else(|| bad("missing L"))?, "L")?;
                Problem::L1Analysis { phi, y, l }
            }
            Kind::Nuclear => Problem::Nuclear { prob: self.matrix_problem()?, cfg: self.splitting(flags) },
            Kind::PsdCone => {
                let prob = self.matrix_problem()?;
                let cost = match &self.cost {
                    None => None,
                    Some(CostSpec::Matrix(rows)) => Some(matrix(rows, "cost")?),
                    Some(CostSpec::Vector(_)) => return Err(bad("cost must be a matrix for psd_cone")),
                };
                Problem::PsdCone { prob, cost, cfg: self.splitting(flags) }
            }
            Kind::MeasureTv | Kind::MeasureNonneg => {
                let family = match &self.phi {
                    Some(PhiSpec::Moments(spec)) => spec.moments,
                    _ => return Err(bad("measure kinds need phi = {\"moments\": \"trigonometric\" | \"monomial\"}")),
                };
                let m = y.len();
                let sys = match family {
                    MomentFamily::Trigonometric => MomentSystem::trigonometric(m)?,
                    MomentFamily::Monomial => MomentSystem::monomial(m)?,
                };
                let nonneg = self.kind == Kind::MeasureNonneg;
                let cost = if nonneg && self.cost.is_some() { vector_cost(0)? } else { Vec::new() };
                let grid_n = flags.grid.or(self.grid_n).unwrap_or(DEFAULT_GRID);
                Problem::Measure { nonneg, sys, y, grid_n, cost }
            }
            Kind::Tv2d => {
                let disks = match &self.phi {
                    Some(PhiSpec::Disks(layout)) => DiskSet::new(layout.disks.clone())?,
                    _ => return Err(bad("tv2d needs phi = {\"disks\": [...]}")),
                };
                let size = match self.size.ok_or_else(|| bad("tv2d needs size"))? {
                    SizeSpec::Square(n) => (n, n),
                    SizeSpec::Rect([w, h]) => (w, h),
                };
                if size.0 == 0 || size.1 == 0 {
                    return Err(bad("image size must be positive"));
                }
                Problem::Tv2d { disks, y, size, cfg: pd_config(self.solver.as_ref(), flags) }
            }
        })
    }

    pub fn spec(&self, problem: &Problem) -> RegularizerSpec {
        match problem {
            Problem::NonnegCone { .. } => RegularizerSpec::NonnegCone,
            Problem::LpEpigraph { cost, .. } => RegularizerSpec::LpEpigraph { cost: cost.clone() },
            Problem::L1Analysis { l, .. } => RegularizerSpec::L1Analysis { l: l.clone() },
            Problem::Nuclear { .. } => RegularizerSpec::Nuclear,
            Problem::PsdCone { .. } => RegularizerSpec::PsdCone,
            Problem::Measure { nonneg: false, .. } => RegularizerSpec::MeasureTv,
            Problem::Measure { nonneg: true, .. } => RegularizerSpec::MeasureNonneg,
            Problem::Tv2d { size, .. } => RegularizerSpec::Tv2d { width: size.0, height: size.1 },
        }
    }
}

pub fn pd_config(solver: Option<&SolverOverrides>, flags: &FlagOverrides) -> PdConfig {
    let s = solver.cloned().unwrap_or_default();
    let mut cfg = PdConfig { seed: flags.seed, ..Default::default() };
    if let Some(v) = flags.iters.or(s.max_iters) {
        cfg.max_iters = v;
    }
    cfg.tol_constraint = flags.tol.or(s.tol);
    cfg.tau = s.tau;
    cfg.sigma = s.sigma;
    if let Some(v) = s.theta {
        cfg.theta = v;
    }
    if let Some(v) = s.tol_change {
        cfg.tol_change = v;
    }
    cfg
}

/// Evaluates `c₀ + c₁x + c₂x² + …`.
pub fn polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
