//! Fixtures shared by the criterion benchmarks.

use dbscd_core::{generate_random, normalize, PackingInstance};

/// Normalized random square instance used across benchmarks.
pub fn square_instance(size: usize, density: f64, seed: u64) -> PackingInstance {
    let raw = generate_random(size, size, density, seed).expect("valid generator arguments");
    normalize(&raw).expect("generated matrices have no empty column")
}
