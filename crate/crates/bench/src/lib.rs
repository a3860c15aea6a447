//! Shared fixtures for the criterion benchmarks.

use sparsegpt_core::bench::{generate_instance, snap_block};
use sparsegpt_core::{DenseMatrix, PruneConfig};

/// Seed used by every benchmark fixture.
pub const SEED: u64 = 0x5eed;

/// A seeded `d × d` pair (weights, calibration inputs).
pub fn instance(d: usize) -> (DenseMatrix, DenseMatrix) {
    generate_instance(d, SEED)
}

/// Half sparsity with `B ≈ √d` and the mask chosen once per block.
pub fn sqrt_config(d: usize) -> PruneConfig {
    let b = snap_block(d, 0.5);
    PruneConfig::new(0.5, b, b)
}
