//! Iterations-to-target measurements over grids of epsilon and size.

use std::time::Instant;

use serde::Serialize;

use crate::dbscd::{PackingSolver, SolveOptions, TraceMode};
use crate::error::{Error, Result};
use crate::instance::{generate_random, normalize, PackingInstance};
use crate::oracle::simplex_packing;
use crate::smoothing::derive_params;

/// `-(1 - 5 eps) * opt`: the objective level the solver is guaranteed to
/// reach by iteration `T`.
pub fn target_value(epsilon: f64, opt: f64) -> f64 {
    -(1.0 - 5.0 * epsilon) * opt
}

/// One benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub epsilon: f64,
    pub n: usize,
    pub m: usize,
    pub nnz: usize,
    #[serde(rename = "T_formula")]
    pub t_formula: u64,
    /// First `k` with `f_mu(x_k) <= target`; empty when not reached or when
    /// no oracle value was available.
    pub iterations_to_target: Option<u64>,
    /// Iterations run times nonzeros.
    pub work: u64,
    pub wall_time_ms: f64,
    /// Target reached within `T_formula` iterations.
    pub success: bool,
    pub seed: u64,
    /// False when the instance exceeded the oracle size limit.
    pub oracle_available: bool,
}

/// Oracle optimum, or `None` above the oracle size cap.
pub fn oracle_opt(inst: &PackingInstance) -> Result<Option<f64>> {
    match simplex_packing(inst) {
        Ok(sol) => Ok(Some(sol.opt_value)),
        Err(Error::SizeLimit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Run the solver until the target (or the full budget) on one instance.
///
/// `opt` is the normalized optimum; without it the full budget runs and the
/// row is flagged.
pub fn bench_run(inst: &PackingInstance, epsilon: f64, seed: u64, opt: Option<f64>) -> Result<BenchRow> {
    let params = derive_params(inst.n(), inst.m(), epsilon)?;
    let opts = SolveOptions {
        trace: TraceMode::Off,
        accumulate_penalties: false,
        target: opt.map(|o| target_value(epsilon, o)),
        stop_at_target: opt.is_some(),
        ..SolveOptions::default()
    };
    let start = Instant::now();
    let report = PackingSolver::new(inst, epsilon, seed, opts)?.run()?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let hit = report.stats.first_target_hit;
    Ok(BenchRow {
        epsilon,
        n: inst.n(),
        m: inst.m(),
        nnz: inst.nnz(),
        t_formula: params.iterations,
        iterations_to_target: hit,
        work: report.work(),
        wall_time_ms,
        success: hit.is_some(),
        seed,
        oracle_available: opt.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// Square sizes `n = m`.
    pub sizes: Vec<usize>,
    /// Solver seeds `0..seeds` per (size, epsilon).
    pub seeds: u64,
    pub density: f64,
    /// Seed of the generated instance for each size.
    pub instance_seed: u64,
}

/// Every (size, epsilon, seed) combination, in that nesting order.
pub fn run_sweep(cfg: &SweepConfig, mut on_row: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        let raw = generate_random(size, size, cfg.density, cfg.instance_seed)?;
        let inst = normalize(&raw)?;
        let opt = oracle_opt(&inst)?;
        if opt.is_none() {
            log::warn!("{size}x{size} exceeds the oracle size limit; target disabled");
        }
        for &eps in &cfg.epsilons {
            for seed in 0..cfg.seeds {
                let row = bench_run(&inst, eps, seed, opt)?;
                on_row(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}
