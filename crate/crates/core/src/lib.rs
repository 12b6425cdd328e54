//! Width-independent approximation of positive linear programs.
//!
//! Packing programs `max 1^T x  s.t.  A x <= 1, x >= 0` are solved by
//! randomized selective coordinate descent on an exponentially smoothed
//! objective, where the coordinates updated in each iteration are those whose
//! truncated gradient falls in a randomly drawn power-of-two bucket. Covering
//! programs are solved through their packing dual by averaging the penalty
//! vectors of the iterates and repairing the few constraints left uncovered.
//!
//! The [`oracle`] module provides exact solutions of small instances for
//! verification, and [`sweep`] measures iterations-to-target.

pub mod covering;
pub mod dbscd;
pub mod error;
pub mod instance;
pub mod matrix;
pub mod mtx;
pub mod oracle;
pub mod reduce;
pub mod smoothing;
pub mod sweep;

pub use covering::{fix_dual, solve_covering, solve_covering_with, CoveringReport, DualAverage};
pub use dbscd::{
    solve_packing, solve_packing_with, truncate, PackingReport, PackingSolver, SolveOptions,
    TraceMode, TruncatedGradient,
};
pub use error::{Error, Result};
pub use instance::{dualize, generate_random, normalize, CoveringInstance, PackingInstance};
pub use matrix::SparseNonnegMatrix;
pub use oracle::{OracleSolution, OracleStatus};
pub use smoothing::{derive_params, SolverParams};
