//! The exponentially smoothed packing objective
//!
//! ```text
//! f_mu(x) = -1^T x + mu * sum_j p_j(x),    p_j(x) = exp(((A x)_j - 1) / mu)
//! ```
//!
//! with its gradient `-1 + A^T p(x)` and the constants that drive the
//! packing solver.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::PackingInstance;
use crate::matrix::SparseNonnegMatrix;
use crate::reduce;

/// Largest penalty exponent accepted before reporting overflow.
pub const EXPONENT_CAP: f64 = 700.0;

/// Largest epsilon the packing solver accepts.
pub const MAX_EPSILON: f64 = 0.5;

/// Constants of one solver run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverParams {
    pub epsilon: f64,
    /// Smoothing parameter `epsilon / (4 ln(n m / epsilon))`.
    pub mu: f64,
    /// Step size `mu / 20`.
    pub alpha: f64,
    /// Number of gradient buckets, `ceil(log2(1 / epsilon))`.
    pub w: u32,
    /// Iteration budget `ceil(10 w ln(2n) / (alpha epsilon))`.
    pub iterations: u64,
    pub n: usize,
    pub m: usize,
}

pub(crate) fn check_epsilon(epsilon: f64, max: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= max {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange {
            epsilon,
            min: 0.0,
            max,
        })
    }
}

/// Smallest `w` with `epsilon * 2^w >= 1`, i.e. `ceil(log2(1/epsilon))`
/// evaluated without rounding error at powers of two.
pub fn bucket_count(epsilon: f64) -> u32 {
    let mut w = 0u32;
    let mut top = epsilon;
    while top < 1.0 {
        top *= 2.0;
        w += 1;
    }
    w.max(1)
}

pub fn derive_params(n: usize, m: usize, epsilon: f64) -> Result<SolverParams> {
    check_epsilon(epsilon, MAX_EPSILON)?;
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be at least 1".into()));
    }
    let nm = n as f64 * m as f64;
    let mu = epsilon / (4.0 * (nm / epsilon).ln());
    let alpha = mu / 20.0;
    let w = bucket_count(epsilon);
    let iterations = (10.0 * w as f64 * (2.0 * n as f64).ln() / (alpha * epsilon)).ceil() as u64;
    Ok(SolverParams {
        epsilon,
        mu,
        alpha,
        w,
        iterations,
        n,
        m,
    })
}

/// Exponential penalties `p_j(x)`, one per constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyVector(Vec<f64>);

impl PenaltyVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Scratch buffers holding `A x`, `p(x)`, `grad f_mu(x)` and `f_mu(x)` for
/// one point. The solver reuses one of these across iterations.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub activity: Vec<f64>,
    pub penalties: Vec<f64>,
    pub gradient: Vec<f64>,
    pub sum_x: f64,
    pub sum_p: f64,
    pub value: f64,
    pub max_activity: f64,
}

impl Evaluation {
    pub fn new(n: usize, m: usize) -> Self {
        Evaluation {
            activity: vec![0.0; m],
            penalties: vec![0.0; m],
            gradient: vec![0.0; n],
            sum_x: 0.0,
            sum_p: 0.0,
            value: 0.0,
            max_activity: 0.0,
        }
    }

    /// Row activities and penalties only.
    pub fn evaluate_penalties(&mut self, a: &SparseNonnegMatrix, x: &[f64], mu: f64) -> Result<()> {
        a.mul_vec_into(x, &mut self.activity);
        let inv_mu = 1.0 / mu;
        let mut max_activity = f64::NEG_INFINITY;
        for (row, &ax) in self.activity.iter().enumerate() {
            let exponent = (ax - 1.0) * inv_mu;
            if exponent > EXPONENT_CAP || exponent.is_nan() {
                return Err(Error::NumericalOverflow { row, exponent });
            }
            max_activity = max_activity.max(ax);
        }
        self.max_activity = max_activity;
        let activity = &self.activity;
        reduce::fill_indexed(&mut self.penalties, 16 * activity.len(), |j| {
            ((activity[j] - 1.0) * inv_mu).exp()
        });
        Ok(())
    }

    /// Activities, penalties, objective value and full gradient.
    pub fn evaluate(&mut self, a: &SparseNonnegMatrix, x: &[f64], mu: f64) -> Result<()> {
        self.evaluate_penalties(a, x, mu)?;
        let penalties = &self.penalties;
        reduce::fill_indexed(&mut self.gradient, a.nnz(), |i| {
            let (rows, vals) = a.col(i);
            let mut acc = 0.0;
            for (&r, &v) in rows.iter().zip(vals) {
                acc += v * penalties[r];
            }
            -1.0 + acc
        });
        debug_assert!(self.gradient.iter().all(|&g| g >= -1.0));
        self.finish_sums(x, mu);
        Ok(())
    }

    /// Bring the evaluation from the previous point to `x`, which differs
    /// from it only in `changed` with `x[changed[k]] - x_old = deltas[k]`.
    ///
    /// Only rows touched by the changed columns get a new penalty, and only
    /// columns sharing such a row get a gradient correction. The result
    /// matches [`Evaluation::evaluate`] up to rounding.
    pub fn update(
        &mut self,
        a: &SparseNonnegMatrix,
        x: &[f64],
        changed: &[usize],
        deltas: &[f64],
        mu: f64,
        scratch: &mut UpdateScratch,
    ) -> Result<()> {
        let inv_mu = 1.0 / mu;
        scratch.touched.clear();
        for (&i, &d) in changed.iter().zip(deltas) {
            let (rows, vals) = a.col(i);
            for (&r, &v) in rows.iter().zip(vals) {
                self.activity[r] += v * d;
                if !scratch.marked[r] {
                    scratch.marked[r] = true;
                    scratch.touched.push(r);
                }
            }
        }
        for &r in &scratch.touched {
            scratch.marked[r] = false;
            let exponent = (self.activity[r] - 1.0) * inv_mu;
            if exponent > EXPONENT_CAP || exponent.is_nan() {
                return Err(Error::NumericalOverflow { row: r, exponent });
            }
        }
        let gradient = &mut self.gradient[..];
        for &r in &scratch.touched {
            let p = ((self.activity[r] - 1.0) * inv_mu).exp();
            let dp = p - self.penalties[r];
            self.penalties[r] = p;
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                debug_assert!(c < gradient.len());
                // SAFETY: column indices of a validated matrix are < n_cols,
                // which is the gradient length.
                unsafe { *gradient.get_unchecked_mut(c) += v * dp };
            }
        }
        for g in &mut self.gradient {
            // A^T p >= 0 exactly; keep rounding from pushing below -1.
            *g = g.max(-1.0);
        }
        self.max_activity = reduce::max_value(&self.activity);
        self.finish_sums(x, mu);
        Ok(())
    }

    fn finish_sums(&mut self, x: &[f64], mu: f64) {
        self.sum_x = reduce::ordered_sum(x);
        self.sum_p = reduce::ordered_sum(&self.penalties);
        self.value = -self.sum_x + mu * self.sum_p;
    }
}

/// Reusable buffers for [`Evaluation::update`].
#[derive(Debug, Clone)]
pub struct UpdateScratch {
    marked: Vec<bool>,
    touched: Vec<usize>,
}

impl UpdateScratch {
    pub fn new(m: usize) -> Self {
        UpdateScratch {
            marked: vec![false; m],
            touched: Vec::new(),
        }
    }
}

fn check_dim(inst: &PackingInstance, x: &[f64]) -> Result<()> {
    if x.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            expected: inst.n(),
            actual: x.len(),
        });
    }
    Ok(())
}

pub fn penalties(inst: &PackingInstance, x: &[f64], mu: f64) -> Result<PenaltyVector> {
    check_dim(inst, x)?;
    let mut ev = Evaluation::new(inst.n(), inst.m());
    ev.evaluate_penalties(inst.matrix(), x, mu)?;
    Ok(PenaltyVector(ev.penalties))
}

/// `f_mu(x) = -1^T x + mu * sum_j p_j(x)`.
pub fn objective(inst: &PackingInstance, x: &[f64], mu: f64) -> Result<f64> {
    let p = penalties(inst, x, mu)?;
    Ok(-reduce::ordered_sum(x) + mu * reduce::ordered_sum(p.as_slice()))
}

/// Gradient of `f_mu` together with the penalties it was built from.
pub fn gradient(inst: &PackingInstance, x: &[f64], mu: f64) -> Result<(Vec<f64>, PenaltyVector)> {
    check_dim(inst, x)?;
    let mut ev = Evaluation::new(inst.n(), inst.m());
    ev.evaluate(inst.matrix(), x, mu)?;
    Ok((ev.gradient, PenaltyVector(ev.penalties)))
}

/// Starting point `x_0[i] = (1 - epsilon/2) / (n ||A_{:i}||_inf)`.
pub fn initial_point(inst: &PackingInstance, epsilon: f64) -> Vec<f64> {
    let n = inst.n() as f64;
    inst.col_max()
        .iter()
        .map(|&norm| (1.0 - epsilon / 2.0) / (n * norm))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, normalize};

    fn one_by_one() -> PackingInstance {
        normalize(&SparseNonnegMatrix::from_dense(&[vec![1.0]]).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn params_ten_by_ten() {
        // Reference values evaluated at 40 digits with mpmath.
        let p = derive_params(10, 10, 0.1).unwrap();
        assert!(close(p.mu, 3.619_120_682_527_098_6e-3, 1e-14));
        assert!(close(p.alpha, 1.809_560_341_263_549_3e-4, 1e-14));
        assert_eq!(p.w, 4);
        assert_eq!(p.iterations, 6_622_012);
    }

    #[test]
    fn params_other_sizes() {
        assert_eq!(derive_params(20, 20, 0.2).unwrap().iterations, 1_682_329);
        assert_eq!(derive_params(20, 20, 0.1).unwrap().iterations, 9_790_640);
        assert_eq!(derive_params(20, 20, 0.05).unwrap().iterations, 53_044_298);
        assert_eq!(derive_params(1, 1, 0.5).unwrap().iterations, 1538);
        assert_eq!(derive_params(1, 1, 0.1).unwrap().iterations, 510_730);
    }

    #[test]
    fn params_epsilon_domain() {
        assert!(matches!(
            derive_params(10, 10, 0.6),
            Err(Error::EpsilonOutOfRange { .. })
        ));
        assert!(derive_params(10, 10, 0.0).is_err());
        assert!(derive_params(10, 10, f64::NAN).is_err());
        assert_eq!(derive_params(3, 3, 0.5).unwrap().w, 1);
    }

    #[test]
    fn bucket_counts() {
        assert_eq!(bucket_count(0.5), 1);
        assert_eq!(bucket_count(0.25), 2);
        assert_eq!(bucket_count(0.2), 3);
        assert_eq!(bucket_count(0.125), 3);
        assert_eq!(bucket_count(0.1), 4);
        assert_eq!(bucket_count(0.05), 5);
        for k in 1..20 {
            let eps = 0.5f64.powi(k);
            assert_eq!(bucket_count(eps), k as u32);
            assert_eq!(bucket_count(eps * 0.999), k as u32 + 1);
        }
    }

    #[test]
    fn penalties_examples() {
        let inst = one_by_one();
        assert_eq!(penalties(&inst, &[1.0], 0.3).unwrap().as_slice(), &[1.0]);
        let p = penalties(&inst, &[0.0], 0.5).unwrap();
        assert!(close(p.as_slice()[0], (-2.0f64).exp(), 1e-15));
        assert!(close(p.as_slice()[0], 0.13534, 1e-4));
    }

    #[test]
    fn objective_and_gradient_examples() {
        let inst = one_by_one();
        let f = objective(&inst, &[0.0], 0.5).unwrap();
        assert!(close(f, 0.5 * (-2.0f64).exp(), 1e-15));
        assert!(close(f, 0.067668, 1e-5));

        let (g, p) = gradient(&inst, &[1.0], 0.01).unwrap();
        assert_eq!(g, vec![0.0]);
        assert_eq!(p.as_slice(), &[1.0]);

        let (g, _) = gradient(&inst, &[0.0], 0.5).unwrap();
        assert!(close(g[0], -1.0 + (-2.0f64).exp(), 1e-15));
        assert!(close(g[0], -0.86466, 1e-5));
    }

    #[test]
    fn overflow_is_reported() {
        let inst = one_by_one();
        let err = penalties(&inst, &[2.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::NumericalOverflow { row: 0, .. }));
        assert!(objective(&inst, &[2.0], 1e-3).is_err());
        assert!(gradient(&inst, &[2.0], 1e-3).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let inst = one_by_one();
        assert!(matches!(
            penalties(&inst, &[1.0, 2.0], 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn initial_point_examples() {
        assert_eq!(initial_point(&one_by_one(), 0.1), vec![0.95]);
        let inst =
            normalize(&SparseNonnegMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap())
                .unwrap();
        assert_eq!(initial_point(&inst, 0.1), vec![0.475, 0.475]);
    }

    #[test]
    fn penalties_match_dense_evaluation() {
        for seed in 0..10 {
            let inst = normalize(&generate_random(5, 5, 0.6, seed).unwrap()).unwrap();
            let dense = inst.matrix().to_dense();
            let x: Vec<f64> = (0..5).map(|i| 0.05 * (i as f64 + seed as f64 % 3.0)).collect();
            let mu = 0.07;
            let p = penalties(&inst, &x, mu).unwrap();
            for (j, row) in dense.iter().enumerate() {
                let ax: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                let naive = ((ax - 1.0) / mu).exp();
                assert!(close(p.as_slice()[j], naive, 1e-14), "{} vs {naive}", p.as_slice()[j]);
            }
        }
    }

    #[test]
    fn initial_point_objective_bound() {
        for seed in 0..50 {
            let n = 2 + (seed as usize % 9);
            let m = 3 + (seed as usize % 7);
            let inst = normalize(&generate_random(n, m, 0.4, seed).unwrap()).unwrap();
            for eps in [0.5, 0.1, 0.05] {
                let params = derive_params(n, m, eps).unwrap();
                let x0 = initial_point(&inst, eps);
                let f0 = objective(&inst, &x0, params.mu).unwrap();
                assert!(f0 <= -(1.0 - eps) / n as f64, "seed {seed} eps {eps}: {f0}");
            }
        }
    }
}
