//! Dynamically-bucketed selective coordinate descent for packing LPs.
//!
//! Each iteration computes the full gradient of the smoothed objective,
//! truncates it into small / medium / large parts, groups the medium
//! coordinates into `w` dyadic buckets by magnitude, draws one bucket
//! uniformly at random and applies the multiplicative update
//! `x[i] <- x[i] * exp(-alpha * xi[i])` to that bucket only.
//!
//! Bucket `t` holds `|xi| in (eps 2^t, eps 2^(t+1)]`. Gradients above 1 are
//! capped to `xi = 1`, which always lands in bucket `w - 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{unscale_packing_solution, PackingInstance};
use crate::smoothing::{self, bucket_count, derive_params, Evaluation, SolverParams, UpdateScratch};

/// Absolute slack on the per-iteration objective decrease.
pub const MONOTONICITY_TOL: f64 = 1e-9;

/// Absolute slack on `max_j (A x_k)_j <= 1 + eps`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Incremental evaluations allowed between two full re-evaluations.
const RESYNC_INTERVAL: u32 = 256;

/// Decomposition of one gradient component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    pub zeta: f64,
    pub xi: f64,
    pub eta: f64,
    pub bucket: Option<u32>,
}

/// Upper end of bucket `t`, `eps * 2^(t+1)`. Exact: scaling by a power of two.
#[inline]
fn bucket_upper(epsilon: f64, t: u32) -> f64 {
    epsilon * (1u64 << (t + 1)) as f64
}

/// Bucket of a medium component `xi`, `None` for `xi = 0`.
///
/// Intervals are open on the left and closed on the right, so
/// `|xi| = eps 2^(t+1)` belongs to bucket `t`.
pub fn bucket_index(xi: f64, epsilon: f64, w: u32) -> Result<Option<u32>> {
    if xi == 0.0 {
        return Ok(None);
    }
    let mag = xi.abs();
    if !(mag > epsilon && mag <= 1.0) {
        return Err(Error::OutOfDomain { value: xi, epsilon });
    }
    Ok(Some(bucket_of(mag, epsilon, w)))
}

#[inline]
fn bucket_of(mag: f64, epsilon: f64, w: u32) -> u32 {
    let last = w - 1;
    let mut t = 0;
    while t < last && mag > bucket_upper(epsilon, t) {
        t += 1;
    }
    t
}

/// Split one gradient component. `g` must be at least -1.
#[inline]
pub fn classify(g: f64, epsilon: f64, w: u32) -> Components {
    if g.abs() <= epsilon {
        Components {
            zeta: g,
            xi: 0.0,
            eta: 0.0,
            bucket: None,
        }
    } else if g <= 1.0 {
        Components {
            zeta: 0.0,
            xi: g,
            eta: 0.0,
            bucket: Some(bucket_of(g.abs(), epsilon, w)),
        }
    } else {
        Components {
            zeta: 0.0,
            xi: 1.0,
            eta: g - 1.0,
            bucket: Some(w - 1),
        }
    }
}

/// Per-coordinate truncated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGradient {
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub bucket: Vec<Option<u32>>,
    pub epsilon: f64,
    pub w: u32,
}

impl TruncatedGradient {
    /// Number of coordinates in bucket `t`.
    pub fn bucket_len(&self, t: u32) -> usize {
        self.bucket.iter().filter(|&&b| b == Some(t)).count()
    }
}

pub fn truncate(grad: &[f64], epsilon: f64) -> Result<TruncatedGradient> {
    smoothing::check_epsilon(epsilon, smoothing::MAX_EPSILON)?;
    let w = bucket_count(epsilon);
    let n = grad.len();
    let mut out = TruncatedGradient {
        zeta: Vec::with_capacity(n),
        xi: Vec::with_capacity(n),
        eta: Vec::with_capacity(n),
        bucket: Vec::with_capacity(n),
        epsilon,
        w,
    };
    for (index, &g) in grad.iter().enumerate() {
        if g.is_nan() || g < -1.0 {
            return Err(Error::GradientBelowMinusOne { index, value: g });
        }
        let c = classify(g, epsilon, w);
        out.zeta.push(c.zeta);
        out.xi.push(c.xi);
        out.eta.push(c.eta);
        out.bucket.push(c.bucket);
    }
    Ok(out)
}

/// Multiplicative update of the coordinates in bucket `t`.
pub fn step(x: &[f64], trunc: &TruncatedGradient, t: u32, alpha: f64) -> Vec<f64> {
    x.iter()
        .zip(&trunc.xi)
        .zip(&trunc.bucket)
        .map(|((&xv, &xi), &b)| {
            if b == Some(t) {
                xv * (-alpha * xi).exp()
            } else {
                xv
            }
        })
        .collect()
}

/// Gradient range that maps into one bucket, for the fused update loop.
#[derive(Debug, Clone, Copy)]
struct BucketWindow {
    lower: f64,
    upper: f64,
}

impl BucketWindow {
    fn new(epsilon: f64, w: u32, t: u32) -> Self {
        let lower = epsilon * (1u64 << t) as f64;
        // Components above 1 are capped into the last bucket.
        let upper = if t == w - 1 {
            f64::INFINITY
        } else {
            bucket_upper(epsilon, t)
        };
        BucketWindow { lower, upper }
    }

    #[inline]
    fn contains(&self, g: f64) -> bool {
        let mag = g.abs();
        mag > self.lower && mag <= self.upper
    }
}

/// How much of the per-iteration trace to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    Off,
    Full,
    /// Keep at most `max_records` evenly spaced iterations plus the last.
    Sampled { max_records: u64 },
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Replaces the derived iteration budget.
    pub iteration_override: Option<u64>,
    /// Abort on an objective increase instead of logging it.
    pub strict: bool,
    pub trace: TraceMode,
    /// Keep the running sum of penalties for the dual average.
    pub accumulate_penalties: bool,
    /// Keep the running sum of gradients (used to check slack identities).
    pub accumulate_gradients: bool,
    /// Record the first iteration whose objective is at or below this value
    /// (normalized units).
    pub target: Option<f64>,
    /// Stop as soon as `target` is reached.
    pub stop_at_target: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            iteration_override: None,
            strict: false,
            trace: TraceMode::Sampled { max_records: 4096 },
            accumulate_penalties: true,
            accumulate_gradients: false,
            target: None,
            stop_at_target: false,
        }
    }
}

/// State of one recorded iteration `k`, taken before its update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub chosen_bucket: u32,
    /// `f_mu(x_k)`.
    pub f_value: f64,
    /// `max_j (A x_k)_j`.
    pub max_row_activity: f64,
    pub updated_count: usize,
    /// Nonzeros touched by the gradient evaluation.
    pub work: usize,
}

/// Invariant bookkeeping over every iteration of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub monotonicity_violations: u64,
    /// Largest `f_mu(x_{k+1}) - f_mu(x_k)` seen (negative when strictly decreasing).
    pub max_increase: f64,
    /// Largest `max_j (A x_k)_j` over all iterates.
    pub max_row_activity: f64,
    /// Iterates with `max_j (A x_k)_j > 1 + eps + 1e-9`.
    pub trajectory_violations: u64,
    /// Number of distinct points at which the gradient was evaluated.
    pub gradient_evaluations: u64,
    /// Total single-coordinate updates.
    pub coordinate_updates: u64,
    /// First `k` with `f_mu(x_k) <= target`, when a target was given.
    pub first_target_hit: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PackingReport {
    /// `x_T / (1 + eps)` in the units of the raw matrix.
    pub x_final: Vec<f64>,
    /// `x_T` in normalized units.
    pub x_raw: Vec<f64>,
    /// `1^T x_final`.
    pub objective: f64,
    pub f_mu_final: f64,
    pub trace: Vec<IterationRecord>,
    pub params: SolverParams,
    /// Iterations actually run.
    pub iterations: u64,
    /// Average penalty vector over the iterations run (normalized units).
    pub penalty_average: Option<Vec<f64>>,
    /// Average gradient over the iterations run.
    pub gradient_average: Option<Vec<f64>>,
    pub seed: u64,
    pub stats: RunStats,
    pub nnz: usize,
}

impl PackingReport {
    /// Total work in the iterations-times-nonzeros cost model.
    pub fn work(&self) -> u64 {
        self.iterations * self.nnz as u64
    }
}

/// Weighted running sum: the value current at the last flush counts
/// `pending` more times.
#[derive(Debug, Clone)]
struct LazySum {
    sum: Vec<f64>,
    pending: u64,
}

impl LazySum {
    fn new(len: usize) -> Self {
        LazySum {
            sum: vec![0.0; len],
            pending: 0,
        }
    }

    fn flush(&mut self, current: &[f64]) {
        if self.pending > 0 {
            let weight = self.pending as f64;
            for (s, &v) in self.sum.iter_mut().zip(current) {
                *s += weight * v;
            }
            self.pending = 0;
        }
    }
}

/// Outcome of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub iteration: u64,
    pub bucket: u32,
    pub updated: usize,
}

/// Iteration-level driver of the packing solver.
///
/// `solve_packing` runs it to completion; tests drive it step by step to
/// inspect intermediate iterates.
pub struct PackingSolver<'a> {
    inst: &'a PackingInstance,
    params: SolverParams,
    opts: SolveOptions,
    seed: u64,
    budget: u64,
    rng: ChaCha8Rng,
    windows: Vec<BucketWindow>,
    x: Vec<f64>,
    eval: Evaluation,
    k: u64,
    penalty_sum: Option<LazySum>,
    gradient_sum: Option<LazySum>,
    trace: Vec<IterationRecord>,
    trace_stride: u64,
    stats: RunStats,
    warned: bool,
    changed: Vec<usize>,
    deltas: Vec<f64>,
    scratch: UpdateScratch,
    since_sync: u32,
}

impl<'a> PackingSolver<'a> {
    pub fn new(
        inst: &'a PackingInstance,
        epsilon: f64,
        seed: u64,
        opts: SolveOptions,
    ) -> Result<Self> {
        let params = derive_params(inst.n(), inst.m(), epsilon)?;
        let budget = opts.iteration_override.unwrap_or(params.iterations);
        let x = smoothing::initial_point(inst, epsilon);
        let mut eval = Evaluation::new(inst.n(), inst.m());
        eval.evaluate(inst.matrix(), &x, params.mu)?;
        let windows = (0..params.w)
            .map(|t| BucketWindow::new(epsilon, params.w, t))
            .collect();
        let trace_stride = match opts.trace {
            TraceMode::Off => 0,
            TraceMode::Full => 1,
            TraceMode::Sampled { max_records } => budget.div_ceil(max_records.max(1)).max(1),
        };
        let first_target_hit = match opts.target {
            Some(target) if eval.value <= target => Some(0),
            _ => None,
        };
        let stats = RunStats {
            monotonicity_violations: 0,
            max_increase: f64::NEG_INFINITY,
            max_row_activity: eval.max_activity,
            trajectory_violations: u64::from(eval.max_activity > 1.0 + epsilon + FEASIBILITY_TOL),
            gradient_evaluations: 1,
            coordinate_updates: 0,
            first_target_hit,
        };
        Ok(PackingSolver {
            inst,
            params,
            penalty_sum: opts.accumulate_penalties.then(|| LazySum::new(inst.m())),
            gradient_sum: opts.accumulate_gradients.then(|| LazySum::new(inst.n())),
            opts,
            seed,
            budget,
            rng: ChaCha8Rng::seed_from_u64(seed),
            windows,
            x,
            eval,
            k: 0,
            trace: Vec::new(),
            trace_stride,
            stats,
            warned: false,
            changed: Vec::new(),
            deltas: Vec::new(),
            scratch: UpdateScratch::new(inst.m()),
            since_sync: 0,
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Current iterate `x_k` (normalized units).
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Activities, penalties, gradient and objective at `x_k`.
    pub fn evaluation(&self) -> &Evaluation {
        &self.eval
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn is_done(&self) -> bool {
        self.k >= self.budget
            || (self.opts.stop_at_target && self.stats.first_target_hit.is_some())
    }

    /// Run one iteration: draw a bucket, update it, re-evaluate.
    pub fn advance(&mut self) -> Result<StepInfo> {
        let k = self.k;
        // The draw happens before any data-parallel work, so the sequence of
        // buckets depends only on the seed.
        let t = self.rng.random_range(0..self.params.w);
        let window = self.windows[t as usize];
        let alpha = self.params.alpha;

        if let Some(acc) = self.penalty_sum.as_mut() {
            acc.pending += 1;
        }
        if let Some(acc) = self.gradient_sum.as_mut() {
            acc.pending += 1;
        }

        self.changed.clear();
        self.deltas.clear();
        for (i, (xv, &g)) in self.x.iter_mut().zip(&self.eval.gradient).enumerate() {
            if window.contains(g) {
                let old = *xv;
                *xv *= (-alpha * g.min(1.0)).exp();
                self.changed.push(i);
                self.deltas.push(*xv - old);
            }
        }
        let updated = self.changed.len();

        if self.trace_stride > 0 && (k % self.trace_stride == 0 || k + 1 == self.budget) {
            self.trace.push(IterationRecord {
                iteration: k,
                chosen_bucket: t,
                f_value: self.eval.value,
                max_row_activity: self.eval.max_activity,
                updated_count: updated,
                work: self.inst.nnz(),
            });
        }

        self.k += 1;
        if updated > 0 {
            self.stats.coordinate_updates += updated as u64;
            self.refresh()?;
        } else {
            // x_{k+1} = x_k, so every derived quantity carries over unchanged.
            self.stats.max_increase = self.stats.max_increase.max(0.0);
        }
        Ok(StepInfo {
            iteration: k,
            bucket: t,
            updated,
        })
    }

    fn refresh(&mut self) -> Result<()> {
        if let Some(acc) = self.penalty_sum.as_mut() {
            acc.flush(&self.eval.penalties);
        }
        if let Some(acc) = self.gradient_sum.as_mut() {
            acc.flush(&self.eval.gradient);
        }
        let previous = self.eval.value;
        let a = self.inst.matrix();
        let scattered: usize = self.changed.iter().map(|&i| a.col(i).0.len()).sum();
        if self.since_sync < RESYNC_INTERVAL && 2 * scattered <= a.nnz() {
            self.eval.update(
                self.inst.matrix(),
                &self.x,
                &self.changed,
                &self.deltas,
                self.params.mu,
                &mut self.scratch,
            )?;
            self.since_sync += 1;
        } else {
            self.eval
                .evaluate(self.inst.matrix(), &self.x, self.params.mu)?;
            self.since_sync = 0;
        }
        self.stats.gradient_evaluations += 1;

        let increase = self.eval.value - previous;
        self.stats.max_increase = self.stats.max_increase.max(increase);
        if increase > MONOTONICITY_TOL {
            self.stats.monotonicity_violations += 1;
            let err = Error::MonotonicityViolation {
                iteration: self.k - 1,
                increase,
            };
            if self.opts.strict {
                return Err(err);
            }
            if !self.warned {
                log::warn!("{err}");
                self.warned = true;
            }
        }
        let activity = self.eval.max_activity;
        self.stats.max_row_activity = self.stats.max_row_activity.max(activity);
        if activity > 1.0 + self.params.epsilon + FEASIBILITY_TOL {
            self.stats.trajectory_violations += 1;
        }
        if let (Some(target), None) = (self.opts.target, self.stats.first_target_hit) {
            if self.eval.value <= target {
                self.stats.first_target_hit = Some(self.k);
            }
        }
        Ok(())
    }

    /// Run the remaining iterations and build the report.
    pub fn run(mut self) -> Result<PackingReport> {
        while !self.is_done() {
            self.advance()?;
        }
        Ok(self.finish())
    }

    /// Build the report from the current iterate.
    pub fn finish(mut self) -> PackingReport {
        let iterations = self.k;
        let average = |acc: Option<LazySum>, current: &[f64]| {
            acc.and_then(|mut acc| {
                acc.flush(current);
                (iterations > 0).then(|| {
                    let count = iterations as f64;
                    acc.sum.into_iter().map(|s| s / count).collect()
                })
            })
        };
        let penalty_average = average(self.penalty_sum.take(), &self.eval.penalties);
        let gradient_average = average(self.gradient_sum.take(), &self.eval.gradient);

        let shrink = 1.0 + self.params.epsilon;
        let scaled: Vec<f64> = self.x.iter().map(|&v| v / shrink).collect();
        let x_final = unscale_packing_solution(&scaled, self.inst.column_scale());
        let objective = crate::reduce::ordered_sum(&x_final);
        PackingReport {
            x_final,
            x_raw: self.x,
            objective,
            f_mu_final: self.eval.value,
            trace: self.trace,
            params: self.params,
            iterations,
            penalty_average,
            gradient_average,
            seed: self.seed,
            stats: self.stats,
            nnz: self.inst.nnz(),
        }
    }
}

/// Run the packing solver with default options.
pub fn solve_packing(
    inst: &PackingInstance,
    epsilon: f64,
    seed: u64,
    iteration_override: Option<u64>,
) -> Result<PackingReport> {
    let opts = SolveOptions {
        iteration_override,
        ..SolveOptions::default()
    };
    solve_packing_with(inst, epsilon, seed, opts)
}

pub fn solve_packing_with(
    inst: &PackingInstance,
    epsilon: f64,
    seed: u64,
    opts: SolveOptions,
) -> Result<PackingReport> {
    PackingSolver::new(inst, epsilon, seed, opts)?.run()
}

/// One `(coordinate, tau)` evaluation of the local smoothness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzSample {
    pub coordinate: usize,
    pub tau: f64,
    /// `grad_i(x(tau)) / grad_i(x_k)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LipschitzReport {
    pub samples: Vec<LipschitzSample>,
    /// Samples with ratio outside `[1/2 - slack, 3/2 + slack]`.
    pub violations: usize,
}

impl LipschitzReport {
    pub fn min_ratio(&self) -> f64 {
        self.samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.ratio)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Slack on the `[1/2, 3/2]` ratio bounds.
pub const LIPSCHITZ_SLACK: f64 = 1e-9;

/// Evaluate the gradient of every coordinate in bucket `t` along the segment
/// from `x_k` to its bucket-`t` update and compare it with the gradient at
/// `x_k`.
pub fn sample_lipschitz_check(
    inst: &PackingInstance,
    state_x: &[f64],
    trunc: &TruncatedGradient,
    t: u32,
    params: &SolverParams,
    taus: &[f64],
) -> Result<LipschitzReport> {
    let (g0, _) = smoothing::gradient(inst, state_x, params.mu)?;
    let next = step(state_x, trunc, t, params.alpha);
    let updated: Vec<usize> = (0..state_x.len())
        .filter(|&i| trunc.bucket[i] == Some(t))
        .collect();
    let mut report = LipschitzReport::default();
    let mut point = vec![0.0; state_x.len()];
    for &tau in taus {
        for (p, (&a, &b)) in point.iter_mut().zip(state_x.iter().zip(&next)) {
            *p = tau * a + (1.0 - tau) * b;
        }
        let (g, _) = smoothing::gradient(inst, &point, params.mu)?;
        for &i in &updated {
            let ratio = g[i] / g0[i];
            if !(0.5 - LIPSCHITZ_SLACK..=1.5 + LIPSCHITZ_SLACK).contains(&ratio) {
                report.violations += 1;
            }
            report.samples.push(LipschitzSample {
                coordinate: i,
                tau,
                ratio,
            });
        }
    }
    Ok(report)
}
