//! Covering solver built on the packing solver's exponential penalties.
//!
//! The covering program is dualized into a packing program, the packing
//! solver runs for the covering budget `T_cov`, the penalty vectors of all
//! iterates are averaged into `y_bar`, constraints that are still badly
//! violated are repaired one variable at a time, and the result is scaled by
//! `1 / (1 - 3 eps)` so that every constraint holds exactly.

use serde::Serialize;

use crate::dbscd::{PackingReport, PackingSolver, SolveOptions};
use crate::error::{Error, Result};
use crate::instance::{dualize, unscale_covering_solution, CoveringInstance, PackingInstance};
use crate::smoothing::{check_epsilon, derive_params, SolverParams};

/// Largest epsilon the repair step accepts.
pub const MAX_COVER_EPSILON: f64 = 0.1;

/// Running sum of penalty vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAverage {
    sum_p: Vec<f64>,
    count: u64,
}

impl DualAverage {
    pub fn new(m: usize) -> Self {
        DualAverage {
            sum_p: vec![0.0; m],
            count: 0,
        }
    }

    pub fn add(&mut self, p: &[f64]) {
        for (s, &v) in self.sum_p.iter_mut().zip(p) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `(1/T) sum_k p(x_k)`.
    pub fn average(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let c = self.count as f64;
        Ok(self.sum_p.iter().map(|&s| s / c).collect())
    }
}

/// `T_cov = max(ceil(6 w ln(2n) / (alpha eps)), ceil(2 w^2 ln(n/eps) / eps^2))`.
pub fn covering_iterations(params: &SolverParams, n: usize) -> u64 {
    let (first, second) = covering_iteration_terms(params, n);
    first.max(second)
}

/// Both terms of the covering budget, in that order.
pub fn covering_iteration_terms(params: &SolverParams, n: usize) -> (u64, u64) {
    let eps = params.epsilon;
    let w = params.w as f64;
    let n = n as f64;
    let first = (6.0 * w * (2.0 * n).ln() / (params.alpha * eps)).ceil();
    let second = (2.0 * w * w * (n / eps).ln() / (eps * eps)).ceil().max(0.0);
    (first as u64, second as u64)
}

/// Repaired covering vector and the number of constraints that needed it.
#[derive(Debug, Clone, PartialEq)]
pub struct FixOutcome {
    pub y: Vec<f64>,
    pub num_fixed: usize,
}

/// Enforce `A^T y >= 1` on an averaged penalty vector.
///
/// Every constraint `i` with `lambda_i = (A^T y_bar)_i - 1 + eps <= -2 eps`
/// gets `-lambda_i / A_{j,i}` added to the variable `j` holding the largest
/// entry of column `i` (lowest row on ties). The result is divided by
/// `1 - 3 eps`.
pub fn fix_dual(y_bar: &[f64], inst: &PackingInstance, epsilon: f64) -> Result<FixOutcome> {
    check_epsilon(epsilon, MAX_COVER_EPSILON)?;
    let a = inst.matrix();
    if y_bar.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            actual: y_bar.len(),
        });
    }
    let coverage = a.tr_mul_vec(y_bar);
    let mut y = y_bar.to_vec();
    let mut num_fixed = 0;
    for (i, &cov) in coverage.iter().enumerate() {
        let lambda = cov - 1.0 + epsilon;
        if lambda <= -2.0 * epsilon {
            let (rows, vals) = a.col(i);
            // Strict comparison keeps the first (lowest-row) maximum.
            let mut best = 0;
            for k in 1..vals.len() {
                if vals[k] > vals[best] {
                    best = k;
                }
            }
            y[rows[best]] += -lambda / vals[best];
            num_fixed += 1;
        }
    }
    let shrink = 1.0 - 3.0 * epsilon;
    for v in &mut y {
        *v /= shrink;
    }
    Ok(FixOutcome { y, num_fixed })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringReport {
    /// Covering solution in the units of the raw constraint matrix.
    pub y_final: Vec<f64>,
    /// `1^T y_final`.
    pub objective: f64,
    pub num_fixed: usize,
    /// `min_i (A^T y_bar)_i - 1` of the averaged penalties, before repair.
    pub slack_min: f64,
    /// Averaged penalties `y_bar` in normalized units.
    pub y_bar: Vec<f64>,
    pub packing_report: PackingReport,
    pub t_cov: u64,
}

/// Solve a covering instance with default options.
pub fn solve_covering(cov: &CoveringInstance, epsilon: f64, seed: u64) -> Result<CoveringReport> {
    solve_covering_with(cov, epsilon, seed, SolveOptions::default())
}

/// Solve a covering instance. `opts.iteration_override` replaces `T_cov`;
/// penalty accumulation is always on.
pub fn solve_covering_with(
    cov: &CoveringInstance,
    epsilon: f64,
    seed: u64,
    opts: SolveOptions,
) -> Result<CoveringReport> {
    check_epsilon(epsilon, MAX_COVER_EPSILON)?;
    let packing = dualize(cov)?;
    let params = derive_params(packing.n(), packing.m(), epsilon)?;
    let t_cov = opts
        .iteration_override
        .unwrap_or_else(|| covering_iterations(&params, packing.n()));
    let opts = SolveOptions {
        iteration_override: Some(t_cov),
        accumulate_penalties: true,
        target: None,
        stop_at_target: false,
        ..opts
    };
    let report = PackingSolver::new(&packing, epsilon, seed, opts)?.run()?;
    let y_bar = report
        .penalty_average
        .clone()
        .ok_or(Error::EmptyAccumulator)?;

    let coverage = packing.matrix().tr_mul_vec(&y_bar);
    let slack_min = coverage
        .iter()
        .map(|&c| c - 1.0)
        .fold(f64::INFINITY, f64::min);
    let fixed = fix_dual(&y_bar, &packing, epsilon)?;
    let y_final = unscale_covering_solution(&fixed.y, packing.column_scale());
    let objective = crate::reduce::ordered_sum(&y_final);
    Ok(CoveringReport {
        y_final,
        objective,
        num_fixed: fixed.num_fixed,
        slack_min,
        y_bar,
        packing_report: report,
        t_cov,
    })
}
