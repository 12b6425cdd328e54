//! Dual-indexed sparse matrix with strictly positive stored entries.

use crate::error::{Error, Result};
use crate::reduce;

/// Sparse `n_rows x n_cols` matrix of positive reals, indexed both by row
/// (CSR) and by column (CSC).
///
/// Both views are built once at construction. Rows are sorted by column and
/// columns by row, so iteration order is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseNonnegMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseNonnegMatrix {
    /// Build from `(row, col, value)` triplets in any order.
    ///
    /// Values must be finite and strictly positive; duplicate coordinates are
    /// rejected.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(row, col, v) in &entries {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfBounds {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry { row, col });
            }
            if v == 0.0 {
                return Err(Error::ExplicitZero { row, col });
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::DuplicateEntry {
                    row: pair[0].0,
                    col: pair[0].1,
                });
            }
        }

        let nnz = entries.len();
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut row_idx = Vec::with_capacity(nnz);
        let mut row_val = Vec::with_capacity(nnz);
        for &(r, c, v) in &entries {
            row_ptr[r + 1] += 1;
            row_idx.push(c);
            row_val.push(v);
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }

        let mut col_ptr = vec![0usize; n_cols + 1];
        for &(_, c, _) in &entries {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut next = col_ptr.clone();
        let mut col_idx = vec![0usize; nnz];
        let mut col_val = vec![0.0f64; nnz];
        // Entries are row-sorted, so each column receives its rows in order.
        for &(r, c, v) in &entries {
            let slot = next[c];
            col_idx[slot] = r;
            col_val[slot] = v;
            next[c] += 1;
        }

        Ok(SparseNonnegMatrix {
            n_rows,
            n_cols,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        })
    }

    /// Build from a dense row-major array, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, entries)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.row_idx[span.clone()], &self.row_val[span])
    }

    /// Row indices and values of column `c`.
    #[inline]
    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let span = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.col_idx[span.clone()], &self.col_val[span])
    }

    /// Entries in row-major order.
    pub fn iter_by_row(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Entries in column-major order.
    pub fn iter_by_col(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |c| {
            let (rows, vals) = self.col(c);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, c, v))
        })
    }

    /// Value at `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Largest entry of each column; zero for empty columns.
    pub fn col_max(&self) -> Vec<f64> {
        (0..self.n_cols)
            .map(|c| self.col(c).1.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// Largest entry of each row; zero for empty rows.
    pub fn row_max(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    pub fn empty_cols(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cols).filter(move |&c| self.col_ptr[c] == self.col_ptr[c + 1])
    }

    pub fn empty_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_rows).filter(move |&r| self.row_ptr[r] == self.row_ptr[r + 1])
    }

    /// Matrix with every entry divided by `divisor`.
    pub fn divided_by(&self, divisor: f64) -> Self {
        let mut out = self.clone();
        for v in out.row_val.iter_mut().chain(out.col_val.iter_mut()) {
            *v /= divisor;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        SparseNonnegMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
            row_val: self.col_val.clone(),
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
            col_val: self.row_val.clone(),
        }
    }

    /// `out = A x`, one sequential dot product per row.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(out.len(), self.n_rows);
        reduce::fill_indexed(out, self.nnz(), |r| {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            acc
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = A^T y`, one sequential dot product per column.
    pub fn tr_mul_vec_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.n_rows);
        assert_eq!(out.len(), self.n_cols);
        reduce::fill_indexed(out, self.nnz(), |c| {
            let (rows, vals) = self.col(c);
            let mut acc = 0.0;
            for (&r, &v) in rows.iter().zip(vals) {
                acc += v * y[r];
            }
            acc
        });
    }

    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        self.tr_mul_vec_into(y, &mut out);
        out
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.iter_by_row() {
            d[r][c] = v;
        }
        d
    }
}
