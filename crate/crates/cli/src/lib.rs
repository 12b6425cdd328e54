//! Command-line front end: `solve`, `gen` and `bench`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dbscd_core::dbscd::SolveOptions;
use dbscd_core::mtx::{format_vector, read_matrix_market_file, write_matrix_market_file};
use dbscd_core::oracle::{
    check_covering_feasible, check_packing_feasible, simplex_covering_matrix,
    simplex_packing_matrix,
};
use dbscd_core::sweep::{run_sweep, SweepConfig};
use dbscd_core::{
    generate_random, normalize, solve_covering_with, solve_packing_with, CoveringInstance, Error,
    SparseNonnegMatrix,
};

/// Exit code of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for usage, parse, size and domain errors.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numerical failures of the solver.
pub const EXIT_NUMERICAL: i32 = 3;

/// Packing solutions are checked against `A x <= 1` with this slack.
pub const PACKING_FEASIBILITY_TOL: f64 = 1e-9;
/// Covering solutions are checked against `C y >= 1` with this slack.
pub const COVERING_FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "dbscd", version, about = "Approximate packing and covering LP solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a packing or covering instance read from a Matrix Market file.
    Solve(SolveArgs),
    /// Write a random non-negative matrix in Matrix Market format.
    Gen(GenArgs),
    /// Measure iterations-to-target over a grid and print CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// max 1^T x  s.t.  A x <= 1
    Pack,
    /// min 1^T y  s.t.  C y >= 1 (one matrix row per constraint)
    Cover,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Compare against the exact oracle (skipped above its size limit).
    #[arg(long)]
    pub verify: bool,
    /// Treat any objective increase as fatal.
    #[arg(long)]
    pub strict: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the solution vector here, one value per line.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Replace the derived iteration budget.
    #[arg(long)]
    pub iterations: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilons: Vec<f64>,
    /// Square instance sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Solver seeds per (size, epsilon).
    #[arg(long)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub instance_seed: u64,
}

/// JSON document printed by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub epsilon: f64,
    pub seed: u64,
    /// Columns of the input matrix.
    pub n: usize,
    /// Rows of the input matrix.
    pub m: usize,
    pub nnz: usize,
    pub iterations: u64,
    pub work: u64,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_mu_final: Option<f64>,
    pub feasible: bool,
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_fixed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub approx_ratio: Option<f64>,
    pub wall_time_ms: f64,
    pub threads: usize,
    pub solution_path: Option<String>,
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    detail: String,
}

/// Exit code for a core error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Render `{error, detail}`.
pub fn error_json(err: &Error) -> String {
    serde_json::to_string(&ErrorReport {
        error: err.kind(),
        detail: err.to_string(),
    })
    .expect("error report serializes")
}

/// Run one parsed command, writing its primary output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args).and_then(|report| {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(path) = &args.output {
                std::fs::write(path, format!("{text}\n"))?;
            }
            writeln!(out, "{text}")?;
            Ok(())
        }),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let _ = writeln!(out, "{}", error_json(&err));
            exit_code(&err)
        }
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start thread pool: {e}")))
}

fn path_string(path: &Path) -> String {
    path.display().to_string()
}

/// Solve, check feasibility, optionally verify, and write the solution file.
pub fn cmd_solve(args: &SolveArgs) -> Result<RunReport, Error> {
    let raw = read_matrix_market_file(&args.input)?;
    let pool = thread_pool(args.threads)?;
    let threads = pool.current_num_threads();
    let start = Instant::now();
    let mut report = pool.install(|| solve_raw(&raw, args))?;
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    report.threads = threads;
    Ok(report)
}

fn solve_raw(raw: &SparseNonnegMatrix, args: &SolveArgs) -> Result<RunReport, Error> {
    let opts = SolveOptions {
        iteration_override: args.iterations,
        strict: args.strict,
        ..SolveOptions::default()
    };
    let (solution, mut report) = match args.mode {
        Mode::Pack => {
            let inst = normalize(raw)?;
            let r = solve_packing_with(&inst, args.epsilon, args.seed, opts)?;
            let check = check_packing_feasible(&r.x_final, raw, PACKING_FEASIBILITY_TOL)?;
            let report = base_report(args, raw, r.iterations, r.objective, check);
            let report = RunReport {
                f_mu_final: Some(r.f_mu_final),
                ..report
            };
            (r.x_final, report)
        }
        Mode::Cover => {
            let inst = CoveringInstance::new(raw)?;
            let r = solve_covering_with(&inst, args.epsilon, args.seed, opts)?;
            let check = check_covering_feasible(&r.y_final, raw, COVERING_FEASIBILITY_TOL)?;
            let report = base_report(args, raw, r.packing_report.iterations, r.objective, check);
            let report = RunReport {
                num_fixed: Some(r.num_fixed),
                ..report
            };
            (r.y_final, report)
        }
    };

    if args.verify {
        let oracle = match args.mode {
            Mode::Pack => simplex_packing_matrix(raw),
            Mode::Cover => simplex_covering_matrix(raw),
        };
        match oracle {
            Ok(sol) => {
                report.oracle_opt = Some(sol.opt_value);
                report.approx_ratio = Some(report.objective / sol.opt_value);
            }
            Err(Error::SizeLimit { size, limit }) => {
                log::warn!("oracle skipped: size {size} exceeds {limit}");
            }
            Err(e) => return Err(e),
        }
    }

    if let Some(path) = &args.solution {
        std::fs::write(path, format_vector(&solution))?;
        report.solution_path = Some(path_string(path));
    }
    Ok(report)
}

fn base_report(
    args: &SolveArgs,
    raw: &SparseNonnegMatrix,
    iterations: u64,
    objective: f64,
    check: dbscd_core::oracle::Feasibility,
) -> RunReport {
    RunReport {
        mode: args.mode,
        epsilon: args.epsilon,
        seed: args.seed,
        n: raw.n_cols(),
        m: raw.n_rows(),
        nnz: raw.nnz(),
        iterations,
        work: iterations * raw.nnz() as u64,
        objective,
        f_mu_final: None,
        feasible: check.feasible,
        max_violation: check.max_violation,
        num_fixed: None,
        oracle_opt: None,
        approx_ratio: None,
        wall_time_ms: 0.0,
        threads: 0,
        solution_path: None,
    }
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), Error> {
    let a = generate_random(args.cols, args.rows, args.density, args.seed)?;
    write_matrix_market_file(&args.output, &a)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = SweepConfig {
        epsilons: args.epsilons.clone(),
        sizes: args.sizes.clone(),
        seeds: args.seeds,
        density: args.density,
        instance_seed: args.instance_seed,
    };
    // Validate everything before the first (possibly long) run.
    for &eps in &cfg.epsilons {
        dbscd_core::derive_params(1, 1, eps)?;
    }
    if cfg.sizes.contains(&0) {
        return Err(Error::InvalidArgument("sizes must be positive".into()));
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut failure = None;
    run_sweep(&cfg, |row| {
        if failure.is_none() {
            if let Err(e) = writer.serialize(row).and_then(|()| Ok(writer.flush()?)) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(Error::Io(e.to_string()));
    }
    Ok(())
}
