//! The pruning loop.
//!
//! [`prune_lazy`] is the production path: rank-1 compensation updates are
//! applied eagerly only inside a lazy block of `B` columns and buffered in a
//! `d × B` error matrix, which is flushed into the remaining columns with one
//! rectangular product per block. [`prune_eager`] applies every rank-1 update
//! to all remaining columns immediately, and [`prune_exact`] replays the lazy
//! schedule in exact rational arithmetic.
//!
//! Blocks are half-open and 0-based: lazy blocks are `[i, i + B)` for
//! `i = 0, B, 2B, …` (the last one may be narrower when `B ∤ d`), and a mask
//! is selected for columns `[j, j + B_s)` whenever `j % B_s == 0`, so every
//! column receives a selected mask.

mod eager;
mod exact;
mod lazy;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use eager::prune_eager;
pub use exact::{prune_exact, ExactPruneResult, ORACLE_LIMIT};
pub use lazy::prune_lazy;

use crate::error::{Error, Result};
use crate::hessian::Lambda;
use crate::mask::MaskBlock;
use crate::matrix::{DenseMatrix, ExecMode, FlopLedger, MatMulBackend, Phase};

/// Parameters of one prune run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Fraction of each column to zero, in `[0, 1]`.
    pub sparsity: f64,
    /// Lazy block width `B`.
    pub block: usize,
    /// Mask block width `B_s`; must divide `block`.
    pub mask_block: usize,
    pub lambda: Lambda,
    /// Backend for the batched outer update.
    pub backend: MatMulBackend,
    pub mode: ExecMode,
}

impl PruneConfig {
    pub fn new(sparsity: f64, block: usize, mask_block: usize) -> Self {
        PruneConfig {
            sparsity,
            block,
            mask_block,
            lambda: Lambda::Auto,
            backend: MatMulBackend::Classical,
            mode: ExecMode::Deterministic,
        }
    }

    pub fn with_lambda(mut self, lambda: Lambda) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_backend(mut self, backend: MatMulBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }

    /// Checks `0 ≤ p ≤ 1`, `1 ≤ B_s ≤ B ≤ d` and `B_s | B`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::config(format!(
                "sparsity must lie in [0, 1], got {}",
                self.sparsity
            )));
        }
        if self.block == 0 || self.mask_block == 0 {
            return Err(Error::config("block and mask block must be at least 1"));
        }
        if !self.block.is_multiple_of(self.mask_block) {
            return Err(Error::config(format!(
                "mask block must divide block ({} does not divide {})",
                self.mask_block, self.block
            )));
        }
        if self.block > d {
            return Err(Error::config(format!(
                "block {} exceeds the matrix dimension {d}",
                self.block
            )));
        }
        self.lambda.validate()?;
        self.backend.validate()
    }
}

/// Binary keep-mask over the full weight matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    rows: usize,
    cols: usize,
    keep: Vec<bool>,
}

impl Mask {
    pub fn all_kept(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            keep: vec![true; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let keep = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Mask { rows, cols, keep }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.keep[row * self.cols + col]
    }

    pub fn column_sum(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.is_kept(r, col)).count()
    }

    pub fn kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Fraction of entries that are pruned.
    pub fn sparsity(&self) -> f64 {
        if self.keep.is_empty() {
            0.0
        } else {
            1.0 - self.kept() as f64 / self.keep.len() as f64
        }
    }

    /// Copies `block` into columns `start..start + block.cols()`.
    pub fn write_block(&mut self, start: usize, block: &MaskBlock) {
        assert_eq!(block.rows(), self.rows, "mask block height mismatch");
        assert!(
            start + block.cols() <= self.cols,
            "mask block out of bounds"
        );
        for r in 0..self.rows {
            for k in 0..block.cols() {
                self.keep[r * self.cols + start + k] = block.is_kept(r, k);
            }
        }
    }

    /// The mask as a 0/1 matrix.
    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |r, c| {
            if self.is_kept(r, c) {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Accumulated wall-clock seconds per phase.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct PhaseTimes([f64; 6]);

impl PhaseTimes {
    pub fn get(&self, phase: Phase) -> f64 {
        self.0[phase as usize]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub(crate) fn add(&mut self, phase: Phase, elapsed: Duration) {
        self.0[phase as usize] += elapsed.as_secs_f64();
    }

    pub(crate) fn time<T>(&mut self, phase: Phase, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(phase, start.elapsed());
        out
    }
}

impl Serialize for PhaseTimes {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(Phase::ALL.len()))?;
        for p in Phase::ALL {
            map.serialize_entry(p.name(), &self.get(p))?;
        }
        map.end()
    }
}

/// Output of a float prune run.
#[derive(Debug, Clone)]
pub struct PruneResult {
    /// `W ∘ M` after compensation; masked-out entries are exactly `+0.0`.
    pub weights: DenseMatrix,
    pub mask: Mask,
    pub ledger: FlopLedger,
    pub phase_seconds: PhaseTimes,
    /// The `λ` actually used (resolved when configured as `Auto`).
    pub lambda: f64,
}

pub(crate) fn check_inputs(cfg: &PruneConfig, w: &DenseMatrix, x: &DenseMatrix) -> Result<usize> {
    let d = w.rows();
    if d == 0 || !w.is_square() {
        return Err(Error::shape(format!(
            "weights must be a non-empty square matrix, got {}x{}",
            w.rows(),
            w.cols()
        )));
    }
    if x.rows() != d {
        return Err(Error::shape(format!(
            "calibration inputs have {} rows, weights have {d} columns",
            x.rows()
        )));
    }
    cfg.validate(d)?;
    Ok(d)
}

/// `W ← W ∘ M`; pruned entries become `+0.0`.
pub(crate) fn apply_mask(w: &mut DenseMatrix, mask: &Mask, ledger: &mut FlopLedger) {
    let (rows, cols) = w.shape();
    let mut view = w.view_mut();
    for r in 0..rows {
        for (c, v) in view.row_mut(r).iter_mut().enumerate() {
            if !mask.is_kept(r, c) {
                *v = 0.0;
            }
        }
    }
    ledger.phase_mut(Phase::Finalize).mul += (rows * cols) as u64;
}
