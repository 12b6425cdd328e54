//! Brute-force vertex enumeration: every choice of `d` tight constraints
//! (including `z_i = 0`) is solved, infeasible points are dropped, and the
//! best feasible point wins.

use super::{OracleSolution, OracleStatus};
use crate::error::{Error, Result};
use crate::matrix::SparseNonnegMatrix;

/// Most variables enumeration accepts.
pub const MAX_ENUMERATION_VARS: usize = 5;

const SINGULAR_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;

/// Solve the `d x d` system in place by Gaussian elimination with partial
/// pivoting. Returns `None` when singular.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, d: usize) -> Option<Vec<f64>> {
    for k in 0..d {
        let p = (k..d).max_by(|&i, &j| a[i * d + k].abs().total_cmp(&a[j * d + k].abs()))?;
        if a[p * d + k].abs() < SINGULAR_TOL {
            return None;
        }
        if p != k {
            for c in 0..d {
                a.swap(p * d + c, k * d + c);
            }
            b.swap(p, k);
        }
        for i in k + 1..d {
            let f = a[i * d + k] / a[k * d + k];
            if f != 0.0 {
                for c in k..d {
                    a[i * d + c] -= f * a[k * d + c];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut z = vec![0.0; d];
    for k in (0..d).rev() {
        let mut s = b[k];
        for c in k + 1..d {
            s -= a[k * d + c] * z[c];
        }
        z[k] = s / a[k * d + k];
    }
    Some(z)
}

/// Advance `idx` to the next `k`-subset of `0..n` in lexicographic order.
fn next_subset(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Maximize `sum z` over `{z >= 0 : rows(z) <= rhs}` (packing, `sign = 1`)
/// or minimize over `{z >= 0 : rows(z) >= rhs}` (covering, `sign = -1`).
fn enumerate(a: &SparseNonnegMatrix, covering: bool, limit: usize) -> Result<OracleSolution> {
    let d = a.n_cols();
    let limit = limit.min(MAX_ENUMERATION_VARS);
    if d > limit {
        return Err(Error::SizeLimit { size: d, limit });
    }
    let m = a.n_rows();
    let dense = a.to_dense();
    // Constraint k < m is row k of A with rhs 1; k >= m is z_{k-m} = 0.
    let total = m + d;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut examined = 0u64;
    let mut idx: Vec<usize> = (0..d).collect();
    if d > 0 && d <= total {
        loop {
            examined += 1;
            let mut sys = vec![0.0; d * d];
            let mut rhs = vec![0.0; d];
            for (r, &k) in idx.iter().enumerate() {
                if k < m {
                    sys[r * d..(r + 1) * d].copy_from_slice(&dense[k]);
                    rhs[r] = 1.0;
                } else {
                    sys[r * d + (k - m)] = 1.0;
                }
            }
            if let Some(z) = solve_dense(sys, rhs, d) {
                let nonneg = z.iter().all(|&v| v >= -FEAS_TOL);
                let ok = nonneg
                    && dense.iter().all(|row| {
                        let s: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                        if covering {
                            s >= 1.0 - FEAS_TOL
                        } else {
                            s <= 1.0 + FEAS_TOL
                        }
                    });
                if ok {
                    let z: Vec<f64> = z.into_iter().map(|v| v.max(0.0)).collect();
                    let val: f64 = z.iter().sum();
                    let better = match &best {
                        None => true,
                        Some((b, _)) => {
                            if covering {
                                val < *b
                            } else {
                                val > *b
                            }
                        }
                    };
                    if better {
                        best = Some((val, z));
                    }
                }
            }
            if !next_subset(&mut idx, total) {
                break;
            }
        }
    }
    Ok(match best {
        Some((opt_value, x_opt)) => OracleSolution {
            opt_value,
            x_opt,
            status: OracleStatus::Optimal,
            pivots: examined,
        },
        None => OracleSolution {
            opt_value: f64::INFINITY,
            x_opt: vec![0.0; d],
            status: OracleStatus::Infeasible,
            pivots: examined,
        },
    })
}

/// Packing optimum by enumeration. `limit` caps the number of variables
/// (never above [`MAX_ENUMERATION_VARS`]).
pub fn enumerate_packing_vertices(a: &SparseNonnegMatrix, limit: usize) -> Result<OracleSolution> {
    enumerate(a, false, limit)
}

/// Covering optimum by enumeration; `c` has one row per constraint.
pub fn enumerate_covering_vertices(c: &SparseNonnegMatrix, limit: usize) -> Result<OracleSolution> {
    enumerate(c, true, limit)
}
