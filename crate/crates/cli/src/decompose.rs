//! `decompose`: atom tables for a stored solution.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use repkit_core::audit::{decompose_solution, RegularizerSpec, SolutionPayload, RECONSTRUCTION_TOL};
use repkit_core::geometry::{birkhoff_decompose, permutation_of, AtomicDecomposition};
use repkit_core::linalg::norm2;
use repkit_core::tv2d::{write_pgm, Image2D, DEFAULT_QUANT_TOL};
use repkit_core::DenseMatrix;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{self, OutputDir, RunManifest};
use crate::problem::{FlagOverrides, ProblemFile};
use crate::Status;

/// Entry tolerance of the Birkhoff decomposition when `--tol` is not given.
const BIRKHOFF_TOL: f64 = 1e-12;

enum Target {
    Spec(RegularizerSpec),
    Birkhoff,
}

fn target(payload: &SolutionPayload, problem: Option<&Path>, kind: Option<&str>, flags: &FlagOverrides) -> CliResult<Target> {
    match (problem, kind) {
        (Some(_), Some(_)) => Err(CliError::Problem("give either --problem or --kind, not both".into())),
        (None, None) => Err(CliError::Problem("one of --problem or --kind is required".into())),
        (Some(path), None) => {
            let file: ProblemFile = io::read_json(path)?;
            let problem = file.validate(flags)?;
            Ok(Target::Spec(file.spec(&problem)))
        }
        (None, Some("birkhoff")) => Ok(Target::Birkhoff),
        (None, Some("tv2d")) => match payload {
            SolutionPayload::Image { image } => {
                Ok(Target::Spec(RegularizerSpec::Tv2d { width: image.width, height: image.height }))
            }
            _ => Err(repkit_core::Error::KindMismatch("tv2d".into()).into()),
        },
        (None, Some(name @ ("lp_epigraph" | "l1_analysis"))) => {
            Err(CliError::Problem(format!("kind {name} has parameters; pass --problem instead")))
        }
        (None, Some(name)) => serde_json::from_value(json!({ "kind": name }))
            .map(Target::Spec)
            .map_err(|_| CliError::Problem(format!("unknown kind {name:?}"))),
    }
}

/// File (or inline reference) holding one atom.
fn atom_payload(out: &mut OutputDir, payload: &SolutionPayload, name: &str, atom: &[f64]) -> CliResult<String> {
    let file = match payload {
        SolutionPayload::Vector { .. } => (format!("atoms/{name}.csv"), io::vector_csv(atom)),
        SolutionPayload::Matrix { matrix } => {
            let m = DenseMatrix::from_row_major(matrix.rows(), matrix.cols(), atom.to_vec())?;
            (format!("atoms/{name}.csv"), io::matrix_csv(&m))
        }
        SolutionPayload::Image { image } => {
            let img = Image2D::new(image.width, image.height, atom.to_vec())?;
            (format!("atoms/{name}.pgm"), write_pgm(&img))
        }
        SolutionPayload::Measure { measure } => {
            // atoms live on the measure's own support: list them inline
            let terms: Vec<String> = atom
                .iter()
                .zip(&measure.atoms)
                .filter(|(a, _)| **a != 0.0)
                .map(|(a, (x, _))| format!("{}*delta({})", io::num(*a), io::num(*x)))
                .collect();
            return Ok(if terms.is_empty() { "0".into() } else { terms.join("+") });
        }
    };
    out.write(&file.0, &file.1)?;
    Ok(file.0)
}

fn atom_table(out: &mut OutputDir, payload: &SolutionPayload, dec: &AtomicDecomposition) -> CliResult<String> {
    let mut table = String::from("index,type,weight,payload\n");
    let mut index = 0;
    let groups = [("point", &dec.point_atoms), ("ray", &dec.ray_atoms)];
    for (kind, atoms) in groups {
        for (atom, weight) in atoms.iter() {
            let reference = atom_payload(out, payload, &format!("{kind}_{index:03}"), atom)?;
            let _ = writeln!(table, "{index},{kind},{},{reference}", io::num(*weight));
            index += 1;
        }
    }
    if dec.lineality_component.iter().any(|v| *v != 0.0) {
        let reference = atom_payload(out, payload, "lineality", &dec.lineality_component)?;
        let _ = writeln!(table, "{index},lineality,{},{reference}", io::num(1.0));
    }
    Ok(table)
}

fn permutation_table(dec: &AtomicDecomposition, n: usize) -> String {
    let mut table = String::from("index,weight,permutation\n");
    for (i, (atom, weight)) in dec.point_atoms.iter().enumerate() {
        let perm = permutation_of(atom, n).map_or_else(
            || "?".to_string(),
            |p| p.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "),
        );
        let _ = writeln!(table, "{i},{},{perm}", io::num(*weight));
    }
    table
}

pub fn cmd_decompose(
    solution: &Path,
    problem: Option<&Path>,
    kind: Option<&str>,
    out: &Path,
    flags: FlagOverrides,
) -> CliResult<Status> {
    let started = Instant::now();
    let payload = io::read_solution(solution)?;
    let target = target(&payload, problem, kind, &flags)?;
    let mut out = OutputDir::create(out)?;
    let x = payload.flatten();

    let (dec, table_name, kind_name, tol) = match &target {
        Target::Birkhoff => {
            let SolutionPayload::Matrix { matrix } = &payload else {
                return Err(repkit_core::Error::KindMismatch("birkhoff".into()).into());
            };
            let dec = birkhoff_decompose(matrix, flags.tol.unwrap_or(BIRKHOFF_TOL))?;
            out.write("permutations.csv", &permutation_table(&dec, matrix.rows()))?;
            (dec, "permutations.csv", "birkhoff", RECONSTRUCTION_TOL)
        }
        Target::Spec(spec) => {
            let dec = decompose_solution(&payload, spec)?;
            let table = atom_table(&mut out, &payload, &dec)?;
            out.write("atoms.csv", &table)?;
            let tol = if matches!(spec, RegularizerSpec::Tv2d { .. }) { DEFAULT_QUANT_TOL } else { RECONSTRUCTION_TOL };
            (dec, "atoms.csv", spec.kind_name(), tol)
        }
    };
    let error = dec.reconstruction_error(&x) / norm2(&x).max(f64::MIN_POSITIVE);
    let summary = json!({
        "kind": kind_name,
        "atoms": dec.atom_count(),
        "reconstruction_error": error,
        "table": table_name,
    });
    println!("{summary}");
    let config = json!({ "kind": kind_name, "problem": problem.map(|p| p.display().to_string()), "tol": flags.tol });
    RunManifest::new("decompose", Some(solution), config, flags.seed).finish(&mut out, started)?;
    Ok(if error <= tol { Status::Pass } else { Status::AuditFail })
}
