//! Portable seeded instances.
//!
//! The generator is SplitMix64 used as a counter-based stream: draw `i` of
//! seed `s` is `mix(s + (i + 1)·γ)` with `γ = 0x9E3779B97F4A7C15` (wrapping
//! arithmetic), where
//!
//! ```text
//! mix(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!         z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!         return z ^ (z >> 31)
//! ```
//!
//! The top 53 bits give `u = (v >> 11) · 2⁻⁵³ ∈ [0, 1)`. Only integer
//! arithmetic and one exact scaling are involved, so the sequence is
//! identical on every platform.

use crate::matrix::{DenseMatrix, RationalMatrix};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Counter-based SplitMix64 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    seed: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { seed }
    }

    /// The `index`-th 64-bit draw.
    pub fn at(&self, index: u64) -> u64 {
        let mut z = self
            .seed
            .wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// The `index`-th draw as a double in `[0, 1)`.
    pub fn unit(&self, index: u64) -> f64 {
        (self.at(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// The `index`-th draw mapped to `[-1, 1)` by `2u - 1`.
    pub fn symmetric(&self, index: u64) -> f64 {
        2.0 * self.unit(index) - 1.0
    }

    /// The `index`-th draw as an integer in `lo..=hi`: `lo + floor(u·(hi - lo + 1))`.
    pub fn integer(&self, index: u64, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty integer range");
        let span = (hi - lo + 1) as f64;
        lo + ((self.unit(index) * span) as i64).min(hi - lo)
    }
}

/// Seeded `d × d` weights `W` (draws `0..d²`) and `d × d` calibration
/// inputs `X` (draws `d²..2d²`), both row-major with entries in `[-1, 1)`.
pub fn generate_instance(d: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let rng = SplitMix64::new(seed);
    let base = (d * d) as u64;
    let w = DenseMatrix::from_fn(d, d, |r, c| rng.symmetric((r * d + c) as u64));
    let x = DenseMatrix::from_fn(d, d, |r, c| rng.symmetric(base + (r * d + c) as u64));
    (w, x)
}

/// Like [`generate_instance`] but with integer entries in `lo..=hi`, for
/// comparisons against the exact oracle.
pub fn generate_integer_instance(
    d: usize,
    seed: u64,
    lo: i64,
    hi: i64,
) -> (RationalMatrix, RationalMatrix) {
    let rng = SplitMix64::new(seed);
    let base = (d * d) as u64;
    let fill = |offset: u64| {
        let rows: Vec<Vec<i64>> = (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| rng.integer(offset + (r * d + c) as u64, lo, hi))
                    .collect()
            })
            .collect();
        RationalMatrix::from_integers(&rows).expect("rows have equal length")
    };
    (fill(0), fill(base))
}
