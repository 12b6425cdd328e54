//! Packing and covering instances in normalized standard form.
//!
//! A packing instance is `max 1^T x  s.t.  A x <= 1, x >= 0`. A covering
//! instance is `min 1^T y  s.t.  C y >= 1, y >= 0`, where `C` is stored with
//! one row per covering constraint; its dual packing matrix is `A = C^T`.
//!
//! Both are normalized by one global divisor so that the smallest column
//! infinity norm of the packing-orientation matrix is exactly 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::SparseNonnegMatrix;

/// Relative tolerance of the normalized-form check.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Normalized packing instance together with the divisor that produced it:
/// `matrix = raw / column_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingInstance {
    matrix: SparseNonnegMatrix,
    column_scale: f64,
    col_max: Vec<f64>,
}

impl PackingInstance {
    pub fn matrix(&self) -> &SparseNonnegMatrix {
        &self.matrix
    }

    pub fn column_scale(&self) -> f64 {
        self.column_scale
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// `||A_{:i}||_inf` of the normalized matrix for every column.
    pub fn col_max(&self) -> &[f64] {
        &self.col_max
    }

    /// The covering program dual to this packing program.
    pub fn dual_covering(&self) -> CoveringInstance {
        CoveringInstance {
            matrix: self.matrix.transpose(),
            column_scale: self.column_scale,
        }
    }
}

/// Normalized covering instance. `matrix` holds one row per covering
/// constraint and equals `raw / column_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringInstance {
    matrix: SparseNonnegMatrix,
    column_scale: f64,
}

impl CoveringInstance {
    /// Normalize a raw covering constraint matrix (rows are constraints).
    ///
    /// A constraint row without entries can never be satisfied and is
    /// reported as `ZeroColumn` of the dual packing matrix.
    pub fn new(raw_constraints: &SparseNonnegMatrix) -> Result<Self> {
        let packing = normalize(&raw_constraints.transpose())?;
        Ok(packing.dual_covering())
    }

    /// Constraint matrix, one row per covering constraint.
    pub fn matrix(&self) -> &SparseNonnegMatrix {
        &self.matrix
    }

    pub fn column_scale(&self) -> f64 {
        self.column_scale
    }

    /// Number of covering variables.
    pub fn n_vars(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Number of covering constraints.
    pub fn n_constraints(&self) -> usize {
        self.matrix.n_rows()
    }
}

/// Scale a raw packing matrix into normalized form.
pub fn normalize(raw: &SparseNonnegMatrix) -> Result<PackingInstance> {
    if let Some(col) = raw.empty_cols().next() {
        return Err(Error::ZeroColumn { col });
    }
    for (row, col, v) in raw.iter_by_row() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    let empty_rows = raw.empty_rows().count();
    if empty_rows > 0 {
        log::warn!("{empty_rows} constraint row(s) have no entries and are vacuous");
    }
    let raw_max = raw.col_max();
    let scale = raw_max.iter().copied().fold(f64::INFINITY, f64::min);
    if raw.n_cols() == 0 || !scale.is_finite() {
        return Err(Error::InvalidArgument("matrix has no columns".into()));
    }
    let matrix = raw.divided_by(scale);
    let col_max = matrix.col_max();
    let inst = PackingInstance {
        matrix,
        column_scale: scale,
        col_max,
    };
    debug_assert!((min_col_norm(&inst) - 1.0).abs() <= NORMALIZATION_TOL);
    Ok(inst)
}

/// Smallest column infinity norm of the stored matrix.
pub fn min_col_norm(inst: &PackingInstance) -> f64 {
    inst.col_max.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Map a normalized packing solution back to the units of the raw matrix.
pub fn unscale_packing_solution(x_normalized: &[f64], column_scale: f64) -> Vec<f64> {
    x_normalized.iter().map(|&v| v / column_scale).collect()
}

/// Map a normalized covering solution back to the units of the raw matrix.
pub fn unscale_covering_solution(y_normalized: &[f64], column_scale: f64) -> Vec<f64> {
    y_normalized.iter().map(|&v| v / column_scale).collect()
}

/// The packing program dual to a covering program.
///
/// Packing variable `i` pairs with covering constraint `i`, so the packing
/// gradient component `i` is the slack of that constraint under the
/// exponential penalties.
pub fn dualize(covering: &CoveringInstance) -> Result<PackingInstance> {
    let renormalized = normalize(&covering.matrix.transpose())?;
    Ok(PackingInstance {
        column_scale: covering.column_scale * renormalized.column_scale,
        ..renormalized
    })
}

/// Random matrix where each entry is present with probability `density`
/// and uniform on (0, 1]. Draws are repeated until no column is empty.
pub fn generate_random(n: usize, m: usize, density: f64, seed: u64) -> Result<SparseNonnegMatrix> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density {density} is outside (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut entries = Vec::new();
        let mut col_hit = vec![false; n];
        for row in 0..m {
            for (col, hit) in col_hit.iter_mut().enumerate() {
                if density >= 1.0 || rng.random::<f64>() < density {
                    // random() is on [0, 1); flip it onto (0, 1].
                    let v = 1.0 - rng.random::<f64>();
                    entries.push((row, col, v));
                    *hit = true;
                }
            }
        }
        if col_hit.iter().all(|&h| h) {
            return SparseNonnegMatrix::from_triplets(m, n, entries);
        }
    }
}
