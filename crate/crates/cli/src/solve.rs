//! `solve` and `audit`.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use repkit_core::audit::{audit, detect_at_infimum, LinearMeasurement, RepresenterCertificate, SolutionPayload};
use repkit_core::finite::{
    l1_analysis_solve, nnls_solve, nuclear_min_solve, psd_solve, simplex_solve, LpProblem, LpStatus,
};
use repkit_core::linalg::{norm_inf, sub};
use repkit_core::measure::{beurling_solve, moment_lp_solve, MeasureSolution, MomentLpOutcome};
use repkit_core::tv2d::{discrete_tv, level_set_report, tv_staircase_solve, write_pgm, DiskOperator, DEFAULT_QUANT_TOL};
use repkit_core::Error;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{self, OutputDir, RunManifest};
use crate::problem::{polynomial, FlagOverrides, Problem, ProblemFile};
use crate::Status;

/// Certificate JSON: the audit result with atom payloads reduced to their
/// weights, plus a solver summary.
pub fn certificate_json(cert: &RepresenterCertificate, solver: Value) -> Value {
    let mut v = serde_json::to_value(cert).expect("serializable certificate");
    let obj = v.as_object_mut().expect("certificate is an object");
    obj.remove("decomposition");
    let weights = |atoms: &[(Vec<f64>, f64)]| atoms.iter().map(|(_, w)| *w).collect::<Vec<_>>();
    obj.insert("point_weights".into(), json!(weights(&cert.decomposition.point_atoms)));
    obj.insert("ray_weights".into(), json!(weights(&cert.decomposition.ray_atoms)));
    obj.insert("solver".into(), solver);
    v
}

pub fn measurement(problem: &Problem) -> CliResult<Box<dyn LinearMeasurement>> {
    Ok(match problem {
        Problem::NonnegCone { phi, .. } | Problem::LpEpigraph { phi, .. } | Problem::L1Analysis { phi, .. } => {
            Box::new(phi.clone())
        }
        Problem::Nuclear { prob, .. } | Problem::PsdCone { prob, .. } => Box::new(prob.clone()),
        Problem::Measure { sys, .. } => Box::new(sys.clone()),
        Problem::Tv2d { disks, size, .. } => Box::new(DiskOperator::new(disks, size.0, size.1)?),
    })
}

struct Solved {
    payload: SolutionPayload,
    summary: Value,
    extra: Vec<(&'static str, String)>,
}

fn measure_summary(sol: &MeasureSolution, sys: &repkit_core::measure::MomentSystem) -> Value {
    json!({
        "objective": sol.objective,
        "moment_residual": sol.moment_residual,
        "grid_n": sol.grid_n,
        "grid_atoms": sol.grid_measure.len(),
        "atoms": sol.measure.len(),
        "certificate_sup": sol.certificate_sup(sys),
    })
}

fn dispatch(problem: &Problem) -> CliResult<Solved> {
    let plain = |payload, summary| Solved { payload, summary, extra: Vec::new() };
    Ok(match problem {
        Problem::NonnegCone { phi, y } => {
            let x = nnls_solve(phi, y)?;
            let residual = norm_inf(&sub(&phi.matvec(&x), y));
            plain(SolutionPayload::Vector { values: x }, json!({ "solver": "nnls", "residual": residual }))
        }
        Problem::LpEpigraph { phi, y, cost } => {
            let sol = simplex_solve(&LpProblem::new(cost.clone(), phi.clone(), y.clone())?)?;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Err(Error::Infeasible("no nonnegative u with phi u = y".into()).into()),
                LpStatus::Unbounded => return Err(CliError::Unbounded("the cost decreases along a feasible ray".into())),
            }
            let summary = json!({ "solver": "simplex", "objective": sol.objective, "basis": sol.basis });
            plain(SolutionPayload::Vector { values: sol.x }, summary)
        }
        Problem::L1Analysis { phi, y, l } => {
            let (u, report) = l1_analysis_solve(phi, y, l)?;
            let summary = json!({
                "solver": "l1_analysis",
                "objective": report.objective,
                "support": report.support,
                "dim_phi_kernel": report.dim_phi_kernel,
                "support_bound": report.support_bound,
            });
            plain(SolutionPayload::Vector { values: u }, summary)
        }
        Problem::Nuclear { prob, cfg } => {
            let sol = nuclear_min_solve(prob, cfg)?;
            let summary = json!({
                "solver": "douglas_rachford",
                "rank": sol.rank,
                "nuclear_norm": sol.nuclear_norm,
                "constraint_residual": sol.constraint_residual,
                "relative_gap": sol.relative_gap,
                "iterations": sol.iterations,
            });
            plain(SolutionPayload::Matrix { matrix: sol.matrix }, summary)
        }
        Problem::PsdCone { prob, cost, cfg } => {
            let sol = psd_solve(prob, cost.as_ref(), cfg)?;
            if sol.best_effort {
                warn!("psd cost handled by projected subgradient; optimality is not certified");
            }
            let summary = json!({
                "solver": "alternating_projections",
                "rank": sol.rank,
                "barvinok_bound": sol.barvinok_bound,
                "within_bound": sol.within_bound,
                "constraint_residual": sol.constraint_residual,
                "objective": sol.objective,
                "iterations": sol.iterations,
                "best_effort": sol.best_effort,
            });
            plain(SolutionPayload::Matrix { matrix: sol.matrix }, summary)
        }
        Problem::Measure { nonneg: false, sys, y, grid_n, .. } => {
            let sol = beurling_solve(sys, y, *grid_n)?;
            let summary = measure_summary(&sol, sys);
            plain(SolutionPayload::Measure { measure: sol.measure }, summary)
        }
        Problem::Measure { nonneg: true, sys, y, grid_n, cost } => {
            let psi = |x: f64| polynomial(cost, x);
            match moment_lp_solve(&psi, sys, y, *grid_n)? {
                MomentLpOutcome::Optimal(sol) => {
                    let summary = measure_summary(&sol, sys);
                    plain(SolutionPayload::Measure { measure: sol.measure }, summary)
                }
                MomentLpOutcome::Unbounded { ray } => {
                    return Err(CliError::Unbounded(format!("cost decreases along a {}-atom measure", ray.len())));
                }
            }
        }
        Problem::Tv2d { disks, y, size, cfg } => {
            let run = tv_staircase_solve(disks, y, *size, cfg)?;
            let residual = norm_inf(&sub(&DiskOperator::new(disks, size.0, size.1)?.apply(&run.image.values), y));
            let levels = level_set_report(&run.image, DEFAULT_QUANT_TOL);
            let summary = json!({
                "solver": "chambolle_pock",
                "tv": discrete_tv(&run.image),
                "residual": residual,
                "raw_tv": discrete_tv(&run.raw),
                "raw_residual": run.raw_residual,
                "iterations": run.trace.iterations(),
                "converged": run.trace.converged,
                "op_norm": run.trace.op_norm,
                "tau": run.trace.tau,
                "sigma": run.trace.sigma,
                "levels": levels.level_count(),
                "all_simple": levels.all_simple(),
            });
            let extra = vec![("raw.pgm", write_pgm(&run.raw)), ("trace.csv", io::trace_csv(&run.trace))];
            Solved { payload: SolutionPayload::Image { image: run.image }, summary, extra }
        }
    })
}

fn solution_file(payload: &SolutionPayload) -> (&'static str, String) {
    match payload {
        SolutionPayload::Vector { values } => ("solution.csv", io::vector_csv(values)),
        SolutionPayload::Matrix { matrix } => ("solution.csv", io::matrix_csv(matrix)),
        SolutionPayload::Measure { measure } => ("solution.csv", io::measure_csv(measure)),
        SolutionPayload::Image { image } => ("image.pgm", write_pgm(image)),
    }
}

fn load(path: &Path, flags: &FlagOverrides) -> CliResult<(ProblemFile, Problem)> {
    let file: ProblemFile = io::read_json(path)?;
    let problem = file.validate(flags)?;
    Ok((file, problem))
}

pub fn cmd_solve(path: &Path, out: &Path, flags: FlagOverrides) -> CliResult<Status> {
    let started = Instant::now();
    let (file, problem) = load(path, &flags)?;
    let spec = file.spec(&problem);
    let mut manifest = RunManifest::new("solve", Some(path), config_echo(&file, &flags), flags.seed);
    let mut out = OutputDir::create(out)?;
    info!("solving {} problem from {}", spec.kind_name(), path.display());

    let solved = match dispatch(&problem) {
        Ok(s) => s,
        Err(CliError::Solver(Error::TvNonConvergence(partial))) => {
            warn!("stopped after {} iterations above the constraint tolerance", partial.trace.iterations());
            out.write("image.pgm", &write_pgm(&partial.image))?;
            out.write("trace.csv", &io::trace_csv(&partial.trace))?;
            manifest.config["converged"] = json!(false);
            manifest.finish(&mut out, started)?;
            return Ok(Status::NonConvergence);
        }
        Err(e) => return Err(e),
    };
    let (name, contents) = solution_file(&solved.payload);
    out.write(name, &contents)?;
    for (name, contents) in &solved.extra {
        out.write(name, contents)?;
    }
    let phi = measurement(&problem)?;
    let at_inf = detect_at_infimum(&solved.payload, &spec);
    let cert = audit(&solved.payload, &spec, phi.as_ref(), at_inf, 0)?;
    out.write("certificate.json", &io::to_json(&certificate_json(&cert, solved.summary)))?;
    info!("audit: {} atoms, bound {}, pass {}", cert.mixed_count, cert.bound, cert.pass);
    manifest.finish(&mut out, started)?;
    Ok(if cert.pass { Status::Pass } else { Status::AuditFail })
}

pub fn cmd_audit(path: &Path, solution: &Path, j: usize, out: &Path, flags: FlagOverrides) -> CliResult<Status> {
    let started = Instant::now();
    let (file, problem) = load(path, &flags)?;
    let spec = file.spec(&problem);
    let payload = io::read_solution(solution)?;
    if let (Problem::Tv2d { size, .. }, SolutionPayload::Image { image }) = (&problem, &payload) {
        if (image.width, image.height) != *size {
            return Err(CliError::Problem(format!(
                "image is {}x{} but the problem is {}x{}",
                image.width, image.height, size.0, size.1
            )));
        }
    }
    let phi = measurement(&problem)?;
    let at_inf = detect_at_infimum(&payload, &spec);
    let cert = audit(&payload, &spec, phi.as_ref(), at_inf, j)?;
    let mut manifest = RunManifest::new("audit", Some(path), config_echo(&file, &flags), flags.seed);
    manifest.config["solution"] = json!(solution.display().to_string());
    manifest.config["j_assumed"] = json!(j);
    let mut out = OutputDir::create(out)?;
    out.write("certificate.json", &io::to_json(&certificate_json(&cert, Value::Null)))?;
    manifest.finish(&mut out, started)?;
    println!("{}", json!({ "kind": cert.kind, "atoms": cert.mixed_count, "bound": cert.bound, "pass": cert.pass }));
    Ok(if cert.pass { Status::Pass } else { Status::AuditFail })
}

pub fn config_echo(file: &ProblemFile, flags: &FlagOverrides) -> Value {
    json!({
        "kind": file.kind,
        "solver": file.solver,
        "iters": flags.iters,
        "tol": flags.tol,
        "grid": flags.grid,
    })
}
