//! Fixed-order reductions and element-wise maps that give bitwise-identical
//! results regardless of how many rayon workers are available.
//!
//! Every output element is produced by the same sequential code on either
//! path, and sums are split into blocks of [`BLOCK`] elements whose partial
//! results are combined left to right. Only the scheduling changes between
//! the sequential and parallel paths, never the arithmetic.

use rayon::prelude::*;

/// Block length for ordered sums. Part of the numerical contract: changing
/// it changes the rounding of every sum.
pub const BLOCK: usize = 1024;

/// Work (in touched nonzeros) below which parallel dispatch is skipped.
pub const PAR_THRESHOLD: usize = 1 << 15;

/// Whether an operation touching `work` values should fan out.
#[inline]
pub fn go_parallel(work: usize) -> bool {
    work >= PAR_THRESHOLD && rayon::current_num_threads() > 1
}

#[inline]
fn block_sum(xs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &v in xs {
        acc += v;
    }
    acc
}

/// Sum of `xs` in fixed block order.
pub fn ordered_sum(xs: &[f64]) -> f64 {
    if go_parallel(xs.len()) {
        let partials: Vec<f64> = xs.par_chunks(BLOCK).map(block_sum).collect();
        block_sum(&partials)
    } else {
        let mut total = 0.0;
        for chunk in xs.chunks(BLOCK) {
            total += block_sum(chunk);
        }
        total
    }
}

/// Fill `out[i] = f(i)` for every index. `work` is the estimated total cost
/// used to decide whether to parallelize.
pub fn fill_indexed<F>(out: &mut [f64], work: usize, f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if go_parallel(work) {
        out.par_chunks_mut(BLOCK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * BLOCK;
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(base + k);
                }
            });
    } else {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
    }
}

/// Maximum of `xs`, or negative infinity for an empty slice. Exact, so the
/// order does not matter.
pub fn max_value(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
