use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use repkit_core::audit::SolutionPayload;
use repkit_core::measure::DiscreteMeasure;
use repkit_core::tv2d::{read_pgm, ConvergenceTrace};
use repkit_core::DenseMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const VECTOR_HEADER: &str = "index,value";
pub const MEASURE_HEADER: &str = "location,amplitude";

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// Output directory that records what was written. Files go through a
/// temporary name and a rename so readers never see partial contents.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Write { path: root.to_path_buf(), source })?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let target = self.root.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Write { path: parent.to_path_buf(), source })?;
        }
        let tmp = self.root.join(format!("{name}.tmp"));
        fs::write(&tmp, contents)
            .and_then(|_| fs::rename(&tmp, &target))
            .map_err(|source| CliError::Write { path: target.clone(), source })?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input: Option<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, input: Option<&Path>, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            input: input.map(|p| p.display().to_string()),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: 0.0,
            outputs: Vec::new(),
        }
    }

    /// Writes `manifest.json` after everything else.
    pub fn finish(mut self, out: &mut OutputDir, started: std::time::Instant) -> CliResult<()> {
        self.wall_time_s = started.elapsed().as_secs_f64();
        self.outputs = out.written().to_vec();
        self.outputs.push("manifest.json".into());
        out.write("manifest.json", &to_json(&self))
    }
}

pub fn vector_csv(values: &[f64]) -> String {
    let mut s = format!("{VECTOR_HEADER}\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", num(*v));
    }
    s
}

pub fn matrix_csv(m: &DenseMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| num(*v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn measure_csv(mu: &DiscreteMeasure) -> String {
    let mut s = format!("{MEASURE_HEADER}\n");
    for (x, a) in &mu.atoms {
        let _ = writeln!(s, "{},{}", num(*x), num(*a));
    }
    s
}

pub fn trace_csv(trace: &ConvergenceTrace) -> String {
    let mut s = String::from("iteration,tv,residual,change\n");
    for e in &trace.entries {
        let _ = writeln!(s, "{},{},{},{}", e.iteration, num(e.tv), num(e.residual), num(e.change));
    }
    s
}

fn parse_row(line: &str, path: &Path, lineno: usize) -> CliResult<Vec<f64>> {
    line.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|e| CliError::Parse {
                path: path.to_path_buf(),
                detail: format!("line {}: {t:?}: {e}", lineno + 1),
            })
        })
        .collect()
}

/// Reads a solution written by `solve`: PGM images, or CSV recognised by its
/// header (`index,value` vectors, `location,amplitude` measures, headerless
/// matrices).
pub fn read_solution(path: &Path) -> CliResult<SolutionPayload> {
    let text = read_text(path)?;
    let parse_err = |detail: String| CliError::Parse { path: path.to_path_buf(), detail };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        let image = read_pgm(&text).map_err(|e| parse_err(e.to_string()))?;
        return Ok(SolutionPayload::Image { image });
    }
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(parse_err("empty file".into()));
    };
    match first.trim() {
        VECTOR_HEADER => {
            let mut values = Vec::new();
            for (n, line) in lines {
                let row = parse_row(line, path, n)?;
                if row.len() != 2 || row[0] != values.len() as f64 {
                    return Err(parse_err(format!("line {}: expected `{},<value>`", n + 1, values.len())));
                }
                values.push(row[1]);
            }
            Ok(SolutionPayload::Vector { values })
        }
        MEASURE_HEADER => {
            let mut atoms = Vec::new();
            for (n, line) in lines {
                let row = parse_row(line, path, n)?;
                if row.len() != 2 {
                    return Err(parse_err(format!("line {}: expected `<location>,<amplitude>`", n + 1)));
                }
                atoms.push((row[0], row[1]));
            }
            let measure = DiscreteMeasure::new(atoms).map_err(|e| parse_err(e.to_string()))?;
            Ok(SolutionPayload::Measure { measure })
        }
        _ => {
            let mut rows = vec![parse_row(first, path, 0)?];
            for (n, line) in lines {
                rows.push(parse_row(line, path, n)?);
            }
            let matrix = DenseMatrix::from_rows(&rows).map_err(|e| parse_err(e.to_string()))?;
            Ok(SolutionPayload::Matrix { matrix })
        }
    }
}
