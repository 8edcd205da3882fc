use thiserror::Error;

use crate::tv2d::{ConvergenceTrace, Image2D};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is not representable by the given generators (residual {residual:.3e})")]
    InfeasiblePoint { residual: f64 },

    #[error("matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),

    #[error("combinatorial limit exceeded: {0}")]
    CombinatorialLimitExceeded(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("operator is not surjective (rank {rank} < {rows})")]
    NotSurjective { rank: usize, rows: usize },

    #[error("{solver} did not converge after {iterations} iterations: {detail}")]
    NonConvergence { solver: &'static str, iterations: usize, detail: String },

    /// Primal-dual TV solver ran out of iterations; carries the last iterate.
    #[error("total-variation solver did not converge after {} iterations", .0.trace.iterations())]
    TvNonConvergence(Box<TvPartial>),

    #[error("disk {0} covers no pixel center")]
    EmptyDisk(usize),

    #[error("payload does not match regularizer: {0}")]
    KindMismatch(String),
}

#[derive(Debug)]
pub struct TvPartial {
    pub image: Image2D,
    pub trace: ConvergenceTrace,
}
