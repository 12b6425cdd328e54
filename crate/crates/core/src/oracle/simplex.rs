//! Dense tableau simplex with Bland's anti-cycling rule.

use crate::error::{Error, Result};

/// Entries at or below this magnitude are never pivoted on.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Unbounded,
}

/// `min c^T z  s.t.  M z = b, z >= 0` in canonical form for `basis`.
pub(crate) struct Tableau {
    rows: usize,
    width: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    value: f64,
    basis: Vec<usize>,
    barred: Vec<bool>,
    pub pivots: u64,
    limit: u64,
}

/// `C(n, k)` saturating at `u64::MAX / 16`.
pub(crate) fn binomial_saturating(n: usize, k: usize) -> u64 {
    let k = k.min(n - k.min(n));
    let cap = (u64::MAX / 16) as f64;
    let mut acc = 1.0f64;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
        if acc >= cap {
            return u64::MAX / 16;
        }
    }
    acc.round() as u64
}

impl Tableau {
    /// `a` is row-major `rows x width`; the columns listed in `basis` must form
    /// an identity and `rhs` must be non-negative.
    pub fn new(rows: usize, width: usize, a: Vec<f64>, rhs: Vec<f64>, basis: Vec<usize>) -> Self {
        debug_assert_eq!(a.len(), rows * width);
        debug_assert!(rhs.iter().all(|&b| b >= 0.0));
        let limit = 10u64.saturating_mul(binomial_saturating(width, rows));
        Tableau {
            rows,
            width,
            a,
            rhs,
            reduced: vec![0.0; width],
            value: 0.0,
            basis,
            barred: vec![false; width],
            pivots: 0,
            limit,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    /// Install objective `cost` and price out the current basis.
    pub fn set_cost(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        self.value = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.width..(r + 1) * self.width];
                for (d, &v) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * v;
                }
                self.value += cb * self.rhs[r];
            }
        }
    }

    pub fn bar(&mut self, col: usize) {
        self.barred[col] = true;
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Values of all variables at the current basic solution.
    pub fn solution(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.width];
        for (r, &b) in self.basis.iter().enumerate() {
            z[b] = self.rhs[r].max(0.0);
        }
        z
    }

    pub fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.limit {
            return Err(Error::CycleLimit { limit: self.limit });
        }
        let w = self.width;
        let p = self.at(r, c);
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.a[r * w + c] = 1.0;

        let (before, rest) = self.a.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for (i, row) in before
            .chunks_mut(w)
            .enumerate()
            .chain(after.chunks_mut(w).enumerate().map(|(k, row)| (k + r + 1, row)))
        {
            let factor = row[c];
            if factor != 0.0 {
                for (v, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * pv;
                }
                row[c] = 0.0;
                self.rhs[i] -= factor * self.rhs[r];
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let d = self.reduced[c];
        if d != 0.0 {
            for (v, &pv) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *v -= d * pv;
            }
            self.reduced[c] = 0.0;
            self.value += d * self.rhs[r];
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Primal simplex with Bland's rule: lowest-index improving column, and
    /// among tied ratios the row whose basic variable has the lowest index.
    pub fn optimize(&mut self) -> Result<Outcome> {
        loop {
            let entering = (0..self.width).find(|&c| !self.barred[c] && self.reduced[c] < -PIVOT_TOL);
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let v = self.at(r, c);
                if v > PIVOT_TOL {
                    let ratio = self.rhs[r] / v;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie {
                                Some((r, ratio))
                            } else if tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio.min(best)))
                            } else {
                                Some((lr, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, c)?;
        }
    }

    /// Pivot basic variables for which `is_artificial` holds out of the
    /// basis where a usable column exists. Returns the rows that could not be
    /// cleared (redundant constraints).
    pub fn drive_out(&mut self, is_artificial: impl Fn(usize) -> bool) -> Result<Vec<usize>> {
        let mut stuck = Vec::new();
        for r in 0..self.rows {
            if !is_artificial(self.basis[r]) {
                continue;
            }
            let col = (0..self.width).find(|&c| !is_artificial(c) && self.at(r, c).abs() > PIVOT_TOL);
            match col {
                Some(c) => self.pivot(r, c)?,
                None => stuck.push(r),
            }
        }
        Ok(stuck)
    }
}
