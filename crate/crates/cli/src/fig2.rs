//! `fig2`: minimum-TV image from disk means, with its level-set report.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use repkit_core::audit::{audit, detect_at_infimum, RegularizerSpec, SolutionPayload};
use repkit_core::linalg::{norm_inf, sub};
use repkit_core::tv2d::{
    default_layout, discrete_tv, level_set_report, tv_staircase_solve, write_pgm, Disk, DiskOperator, DiskSet,
    Image2D, DEFAULT_QUANT_TOL,
};
use repkit_core::Error;
use serde::Deserialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{self, OutputDir, RunManifest};
use crate::problem::{pd_config, FlagOverrides};
use crate::solve::certificate_json;
use crate::Status;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFile {
    disks: Vec<Disk>,
    #[serde(default)]
    y: Option<Vec<f64>>,
}

/// Disk layout as an image: each disk filled with its measurement.
fn layout_image(disks: &DiskSet, y: &[f64], size: usize) -> CliResult<Image2D> {
    let members = disks.members(size, size)?;
    let mut img = Image2D::constant(size, size, 0.0);
    for (idx, v) in members.iter().zip(y) {
        for &p in idx {
            img.values[p] = *v;
        }
    }
    Ok(img)
}

pub fn cmd_fig2(
    size: usize,
    layout: Option<&Path>,
    y_flag: Option<&[f64]>,
    out: &Path,
    flags: FlagOverrides,
) -> CliResult<Status> {
    let started = Instant::now();
    if size == 0 {
        return Err(CliError::Problem("size must be positive".into()));
    }
    let (disks, file_y) = match layout {
        Some(path) => {
            let file: LayoutFile = io::read_json(path)?;
            (DiskSet::new(file.disks)?, file.y)
        }
        None => {
            let (disks, y) = default_layout(size);
            (disks, Some(y))
        }
    };
    let y = y_flag.map(<[f64]>::to_vec).or(file_y).ok_or_else(|| CliError::Problem("no measurements: pass --y".into()))?;
    if y.len() != disks.len() {
        return Err(CliError::Problem(format!("{} disks but {} measurements", disks.len(), y.len())));
    }
    let cfg = pd_config(None, &flags);
    let config = json!({
        "size": size,
        "disks": disks.disks,
        "y": y,
        "default_layout": layout.is_none(),
        "pd": cfg,
    });
    let manifest = RunManifest::new("fig2", layout, config, flags.seed);
    let mut out = OutputDir::create(out)?;
    out.write("disks.pgm", &write_pgm(&layout_image(&disks, &y, size)?))?;

    info!("fig2: {size}x{size}, {} disks, up to {} iterations", disks.len(), cfg.max_iters);
    let run = match tv_staircase_solve(&disks, &y, (size, size), &cfg) {
        Ok(run) => run,
        Err(Error::TvNonConvergence(partial)) => {
            warn!("stopped after {} iterations above the constraint tolerance", partial.trace.iterations());
            out.write("raw.pgm", &write_pgm(&partial.image))?;
            out.write("trace.csv", &io::trace_csv(&partial.trace))?;
            manifest.finish(&mut out, started)?;
            return Ok(Status::NonConvergence);
        }
        Err(e) => return Err(e.into()),
    };

    let op = DiskOperator::new(&disks, size, size)?;
    let residual = norm_inf(&sub(&op.apply(&run.image.values), &y));
    let report = level_set_report(&run.image, DEFAULT_QUANT_TOL);
    let raw_report = level_set_report(&run.raw, DEFAULT_QUANT_TOL);
    let mut report_json = serde_json::to_value(&report).expect("serializable report");
    report_json["tv"] = json!(discrete_tv(&run.image));
    report_json["residual"] = json!(residual);
    report_json["iterations"] = json!(run.trace.iterations());
    report_json["converged"] = json!(run.trace.converged);
    report_json["raw_iterate"] = json!({
        "level_count": raw_report.level_count(),
        "all_simple": raw_report.all_simple(),
        "tv": discrete_tv(&run.raw),
        "residual": run.raw_residual,
    });

    let spec = RegularizerSpec::Tv2d { width: size, height: size };
    let payload = SolutionPayload::Image { image: run.image.clone() };
    let cert = audit(&payload, &spec, &op, detect_at_infimum(&payload, &spec), 0)?;
    let structural = report.all_simple() && report.level_count() <= op.m() + 1;

    out.write("result.pgm", &write_pgm(&run.image))?;
    out.write("raw.pgm", &write_pgm(&run.raw))?;
    out.write("trace.csv", &io::trace_csv(&run.trace))?;
    out.write("level_report.json", &io::to_json(&report_json))?;
    out.write("certificate.json", &io::to_json(&certificate_json(&cert, json!({ "structural_check": structural }))))?;
    manifest.finish(&mut out, started)?;

    println!(
        "{}",
        json!({
            "levels": report.level_count(),
            "all_simple": report.all_simple(),
            "raw_levels": raw_report.level_count(),
            "audit_pass": cert.pass,
        })
    );
    Ok(if cert.pass && structural { Status::Pass } else { Status::AuditFail })
}
