mod decompose;
mod error;
mod fig2;
mod io;
mod problem;
mod slice;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use log::LevelFilter;

use crate::error::{CliError, CliResult};
use crate::problem::FlagOverrides;

#[derive(Debug, Parser)]
#[command(name = "repkit", version, about = "Solve regularized linear inverse problems and certify sparse representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration limit of the iterative solvers.
    #[arg(long)]
    iters: Option<usize>,
    /// Grid size for measure problems.
    #[arg(long)]
    grid: Option<usize>,
    /// Solver or decomposition tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn flags(&self) -> FlagOverrides {
        FlagOverrides { iters: self.iters, tol: self.tol, grid: self.grid, seed: self.seed }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file, write the solution and its certificate.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write the atomic decomposition of a stored solution.
    Decompose {
        solution: PathBuf,
        /// Problem file providing the regularizer.
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Regularizer kind without parameters, or `birkhoff`.
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Audit a stored solution against a problem file.
    Audit {
        problem: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Assumed dimension of the face containing the data.
        #[arg(long, default_value_t = 0)]
        j: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Minimum-TV image from disk averages.
    Fig2 {
        #[arg(long, default_value_t = 200)]
        size: usize,
        /// JSON file with `disks` and optionally `y`.
        #[arg(long)]
        disks: Option<PathBuf>,
        /// Disk means, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Extreme points of the slice of the l1 ball by the range of L.
    EnumerateSlice {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    AuditFail,
    NonConvergence,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::AuditFail => 2,
            Status::NonConvergence => 3,
        }
    }
}

fn init_logging() {
    let level = match std::env::var("REPKIT_LOG").as_deref() {
        Ok("info") => LevelFilter::Info,
        Ok("trace") => LevelFilter::Trace,
        Ok("quiet") | Ok("") | Err(_) => LevelFilter::Off,
        Ok(other) => {
            eprintln!("REPKIT_LOG={other:?} not recognised (quiet, info, trace); logging off");
            LevelFilter::Off
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn run(command: Command) -> CliResult<Status> {
    match command {
        Command::Solve { problem, common } => solve::cmd_solve(&problem, &common.out, common.flags()),
        Command::Decompose { solution, problem, kind, common } => {
            decompose::cmd_decompose(&solution, problem.as_deref(), kind.as_deref(), &common.out, common.flags())
        }
        Command::Audit { problem, solution, j, common } => {
            solve::cmd_audit(&problem, &solution, j, &common.out, common.flags())
        }
        Command::Fig2 { size, disks, y, common } => {
            fig2::cmd_fig2(size, disks.as_deref(), y.as_deref(), &common.out, common.flags())
        }
        Command::EnumerateSlice { input, common } => slice::cmd_enumerate_slice(&input, &common.out, common.flags()),
    }
}

fn fail(err: &CliError) -> ExitCode {
    println!("{}", serde_json::to_string(&err.document()).expect("serializable error"));
    ExitCode::from(if err.is_non_convergence() { Status::NonConvergence.code() } else { 1 })
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let doc = serde_json::json!({ "error": "usage", "message": e.kind().to_string() });
            println!("{doc}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => fail(&e),
    }
}
