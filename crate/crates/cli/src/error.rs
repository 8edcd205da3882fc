use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("malformed JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("cannot parse {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    #[error("problem is unbounded: {0}")]
    Unbounded(String),

    #[error(transparent)]
    Solver(#[from] repkit_core::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        use repkit_core::Error as E;
        match self {
            Self::Read { .. } => "read_error",
            Self::Write { .. } => "write_error",
            Self::Json { .. } => "malformed_json",
            Self::Problem(_) => "invalid_problem",
            Self::Parse { .. } => "parse_error",
            Self::Unbounded(_) => "unbounded",
            Self::Solver(e) => match e {
                E::DimensionMismatch(_) => "dimension_mismatch",
                E::InvalidInput(_) => "invalid_input",
                E::InfeasiblePoint { .. } => "infeasible_point",
                E::NotDoublyStochastic(_) => "not_doubly_stochastic",
                E::CombinatorialLimitExceeded(_) => "combinatorial_limit_exceeded",
                E::Infeasible(_) => "infeasible",
                E::NotSurjective { .. } => "not_surjective",
                E::NonConvergence { .. } | E::TvNonConvergence(_) => "non_convergence",
                E::EmptyDisk(_) => "empty_disk",
                E::KindMismatch(_) => "kind_mismatch",
            },
        }
    }

    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Self::Solver(repkit_core::Error::NonConvergence { .. } | repkit_core::Error::TvNonConvergence(_))
        )
    }

    pub fn document(&self) -> ErrorDocument {
        ErrorDocument { error: self.code(), message: self.to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorDocument {
    pub error: &'static str,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;
