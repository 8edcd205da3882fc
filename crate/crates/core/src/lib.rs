//! Sparse solutions of linear inverse problems: solvers that return extreme
//! points of their solution sets, and audits that count the atoms.

pub mod audit;
pub mod error;
pub mod finite;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod measure;
pub mod tv2d;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
