//! `enumerate-slice`: extreme points of `ran(L) ∩ B₁`.

use std::path::Path;
use std::time::Instant;

use repkit_core::geometry::{enumerate_slice_extreme_points, slice_extreme_point_bound};
use repkit_core::DenseMatrix;
use serde::Deserialize;
use serde_json::json;

use crate::error::CliResult;
use crate::io::{self, OutputDir, RunManifest};
use crate::problem::{matrix, FlagOverrides};
use crate::Status;

const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceFile {
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
}

pub fn cmd_enumerate_slice(path: &Path, out: &Path, flags: FlagOverrides) -> CliResult<Status> {
    let started = Instant::now();
    let file: SliceFile = io::read_json(path)?;
    let l = matrix(&file.l, "L")?;
    let tol = flags.tol.unwrap_or(DEFAULT_TOL);
    let points = enumerate_slice_extreme_points(&l, tol)?;
    let (p, n) = l.shape();
    let summary = json!({
        "p": p,
        "n": n,
        "count": points.len(),
        "bound": slice_extreme_point_bound(p, n).to_string(),
    });
    let mut out = OutputDir::create(out)?;
    let table = if points.is_empty() { String::new() } else { io::matrix_csv(&DenseMatrix::from_rows(&points)?) };
    out.write("extreme_points.csv", &table)?;
    out.write("slice.json", &io::to_json(&summary))?;
    RunManifest::new("enumerate-slice", Some(path), json!({ "tol": tol }), flags.seed).finish(&mut out, started)?;
    println!("{summary}");
    Ok(Status::Pass)
}
