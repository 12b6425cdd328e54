//! Exact LP solving for small instances: a dense simplex method and a
//! brute-force vertex enumeration used to cross-check it.

mod simplex;
mod vertex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{CoveringInstance, PackingInstance};
use crate::matrix::SparseNonnegMatrix;

pub use simplex::PIVOT_TOL;
pub use vertex::{enumerate_covering_vertices, enumerate_packing_vertices, MAX_ENUMERATION_VARS};

use simplex::{Outcome, Tableau};

/// Largest `rows + cols` the dense simplex accepts.
pub const ORACLE_SIZE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub opt_value: f64,
    pub x_opt: Vec<f64>,
    pub status: OracleStatus,
    /// Simplex pivots, or candidate bases examined by enumeration.
    pub pivots: u64,
}

fn check_size(a: &SparseNonnegMatrix) -> Result<()> {
    let size = a.n_rows() + a.n_cols();
    if size > ORACLE_SIZE_LIMIT {
        return Err(Error::SizeLimit {
            size,
            limit: ORACLE_SIZE_LIMIT,
        });
    }
    Ok(())
}

/// Exact optimum of `max 1^T x  s.t.  A x <= 1, x >= 0` for the stored
/// (normalized) matrix.
pub fn simplex_packing(inst: &PackingInstance) -> Result<OracleSolution> {
    simplex_packing_matrix(inst.matrix())
}

/// Same as [`simplex_packing`] on an arbitrary non-negative matrix.
pub fn simplex_packing_matrix(a: &SparseNonnegMatrix) -> Result<OracleSolution> {
    check_size(a)?;
    let (m, n) = (a.n_rows(), a.n_cols());
    let width = n + m;
    let mut t = vec![0.0; m * width];
    for (r, c, v) in a.iter_by_row() {
        t[r * width + c] = v;
    }
    for r in 0..m {
        t[r * width + n + r] = 1.0;
    }
    let mut tab = Tableau::new(m, width, t, vec![1.0; m], (n..n + m).collect());
    let mut cost = vec![0.0; width];
    cost[..n].fill(-1.0);
    tab.set_cost(&cost);
    let outcome = tab.optimize()?;
    let z = tab.solution();
    let x_opt = z[..n].to_vec();
    let status = match outcome {
        Outcome::Optimal => OracleStatus::Optimal,
        Outcome::Unbounded => OracleStatus::Unbounded,
    };
    let opt_value = match status {
        OracleStatus::Optimal => x_opt.iter().sum(),
        _ => f64::INFINITY,
    };
    Ok(OracleSolution {
        opt_value,
        x_opt,
        status,
        pivots: tab.pivots,
    })
}

/// Exact optimum of `min 1^T y  s.t.  C y >= 1, y >= 0` for the stored
/// (normalized) constraint matrix.
pub fn simplex_covering(inst: &CoveringInstance) -> Result<OracleSolution> {
    simplex_covering_matrix(inst.matrix())
}

/// Two-phase simplex on `C y - s + u = 1` with artificials `u`.
pub fn simplex_covering_matrix(c: &SparseNonnegMatrix) -> Result<OracleSolution> {
    check_size(c)?;
    let (r_count, n) = (c.n_rows(), c.n_cols());
    let width = n + 2 * r_count;
    let art0 = n + r_count;
    let mut t = vec![0.0; r_count * width];
    for (r, col, v) in c.iter_by_row() {
        t[r * width + col] = v;
    }
    for r in 0..r_count {
        t[r * width + n + r] = -1.0;
        t[r * width + art0 + r] = 1.0;
    }
    let mut tab = Tableau::new(r_count, width, t, vec![1.0; r_count], (art0..width).collect());

    let mut cost = vec![0.0; width];
    cost[art0..].fill(1.0);
    tab.set_cost(&cost);
    tab.optimize()?;
    let infeasibility = tab.value();
    if infeasibility > 1e-9 {
        return Ok(OracleSolution {
            opt_value: f64::INFINITY,
            x_opt: vec![0.0; n],
            status: OracleStatus::Infeasible,
            pivots: tab.pivots,
        });
    }
    let stuck = tab.drive_out(|col| col >= art0)?;
    if !stuck.is_empty() {
        log::debug!("{} redundant covering constraint(s)", stuck.len());
    }
    for col in art0..width {
        tab.bar(col);
    }
    let mut cost = vec![0.0; width];
    cost[..n].fill(1.0);
    tab.set_cost(&cost);
    // Phase two starts feasible and the objective is bounded below by 0.
    let outcome = tab.optimize()?;
    debug_assert_eq!(outcome, Outcome::Optimal);
    let z = tab.solution();
    let y = z[..n].to_vec();
    Ok(OracleSolution {
        opt_value: y.iter().sum(),
        x_opt: y,
        status: OracleStatus::Optimal,
        pivots: tab.pivots,
    })
}

/// Result of a feasibility check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_violation: f64,
}

fn finish_check(max_violation: f64, v: &[f64], tol: f64) -> Feasibility {
    let nonneg = v.iter().all(|&x| x >= -tol);
    Feasibility {
        feasible: nonneg && max_violation <= tol,
        max_violation,
    }
}

/// `max_j ((A x)_j - 1)`; feasible iff at most `tol` and `x >= -tol`.
pub fn check_packing_feasible(x: &[f64], a: &SparseNonnegMatrix, tol: f64) -> Result<Feasibility> {
    if x.len() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: a.n_cols(),
            actual: x.len(),
        });
    }
    let ax = a.mul_vec(x);
    let worst = ax.iter().map(|&v| v - 1.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(finish_check(worst, x, tol))
}

/// `max_r (1 - (C y)_r)` for a constraint matrix with one row per covering
/// constraint; feasible iff at most `tol` and `y >= -tol`.
pub fn check_covering_feasible(y: &[f64], c: &SparseNonnegMatrix, tol: f64) -> Result<Feasibility> {
    if y.len() != c.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: c.n_cols(),
            actual: y.len(),
        });
    }
    let cy = c.mul_vec(y);
    let worst = cy.iter().map(|&v| 1.0 - v).fold(f64::NEG_INFINITY, f64::max);
    Ok(finish_check(worst, y, tol))
}
