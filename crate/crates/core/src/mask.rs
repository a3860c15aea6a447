//! Mask selection: per-column saliency `w² / H̃_cc²` and top-k ranking.
//!
//! Selection runs down each column of the weight matrix, across its rows.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hessian::InverseHessian;
use crate::matrix::{ExecMode, MatRef, OpCounts};

/// Diagonal entries of `H̃` smaller in magnitude than this are rejected.
pub const MIN_DIAGONAL: f64 = 1e-300;

/// Number of weights kept per column: `d - floor(p·d)`.
///
/// `p·d` is nudged up by `1e-9` before flooring so that products such as
/// `0.29 · 100 = 28.999…` count as 29 pruned entries.
pub fn keep_count(d: usize, sparsity: f64) -> usize {
    let pruned = (sparsity * d as f64 + 1e-9).floor() as usize;
    d - pruned.min(d)
}

/// Non-negative saliency scores for one column.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyVector(Vec<f64>);

impl SaliencyVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `wᵢ = columnᵢ² / h_diag²`. `column_index` only labels the error.
pub fn saliency(
    column: &[f64],
    h_diag: f64,
    column_index: usize,
    counts: &mut OpCounts,
) -> Result<SaliencyVector> {
    if !(h_diag.abs() >= MIN_DIAGONAL) {
        return Err(Error::DegenerateDiagonal {
            column: column_index,
            value: h_diag,
        });
    }
    let denom = h_diag * h_diag;
    let values = column.iter().map(|w| w * w / denom).collect();
    let n = column.len() as u64;
    counts.mul += n + 1;
    counts.div += n;
    Ok(SaliencyVector(values))
}

/// Indices of the `k` largest saliencies in descending order. Equal scores
/// rank the smaller index first. Every comparison made by the sort is tallied.
pub fn top_k_indices(w: &SaliencyVector, k: usize, counts: &mut OpCounts) -> Result<Vec<usize>> {
    let d = w.len();
    if k > d {
        return Err(Error::shape(format!(
            "cannot select top {k} of {d} entries"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..d).collect();
    let mut compares = 0u64;
    // Stable sort on descending score keeps ascending indices among ties.
    order.sort_by(|&a, &b| {
        compares += 1;
        w.0[b].partial_cmp(&w.0[a]).unwrap_or(Ordering::Equal)
    });
    counts.cmp += compares;
    order.truncate(k);
    Ok(order)
}

/// Binary `d × r` mask for `r` consecutive columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskBlock {
    rows: usize,
    cols: usize,
    keep: Vec<bool>,
    keep_count: usize,
}

impl MaskBlock {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn keep_count(&self) -> usize {
        self.keep_count
    }

    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.keep[row * self.cols + col]
    }

    pub fn column_sum(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.is_kept(r, col)).count()
    }
}

fn select_column(
    column: &[f64],
    h_diag: f64,
    global_col: usize,
    keep: usize,
) -> Result<(Vec<usize>, OpCounts)> {
    let mut counts = OpCounts::ZERO;
    let w = saliency(column, h_diag, global_col, &mut counts)?;
    let idx = top_k_indices(&w, keep, &mut counts)?;
    Ok((idx, counts))
}

/// Chooses the surviving weights of `block` (the `d × r` columns starting at
/// global column `start`), keeping `d - floor(p·d)` entries per column.
pub fn mask_select(
    sparsity: f64,
    block: MatRef<'_>,
    h: &InverseHessian,
    start: usize,
    mode: ExecMode,
    counts: &mut OpCounts,
) -> Result<MaskBlock> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::Domain {
            what: "sparsity",
            value: sparsity,
            range: 0.0..=1.0,
        });
    }
    let (d, r) = block.shape();
    if r == 0 || start + r > h.dim() || d == 0 {
        return Err(Error::shape(format!(
            "mask block of {d}x{r} at column {start} does not fit a {}-dimensional Hessian",
            h.dim()
        )));
    }
    let keep = keep_count(d, sparsity);
    let job = |k: usize| select_column(&block.column(k), h.diag(start + k), start + k, keep);
    let per_column: Vec<(Vec<usize>, OpCounts)> = match mode {
        ExecMode::Deterministic => (0..r).map(job).collect::<Result<_>>()?,
        ExecMode::Performance => (0..r).into_par_iter().map(job).collect::<Result<_>>()?,
    };

    let mut mask = vec![false; d * r];
    for (k, (idx, c)) in per_column.into_iter().enumerate() {
        for j in idx {
            mask[j * r + k] = true;
        }
        *counts += c;
    }
    Ok(MaskBlock {
        rows: d,
        cols: r,
        keep: mask,
        keep_count: keep,
    })
}
