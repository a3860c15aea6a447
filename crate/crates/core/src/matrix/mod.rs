//! Dense and exact-rational matrices, multiplication backends, SPD inversion
//! and per-phase operation counting.
//!
//! All index ranges are half-open and 0-based.

mod dense;
mod inverse;
pub mod io;
mod ledger;
mod multiply;
mod rational;

pub use dense::{DenseMatrix, MatMut, MatRef};
pub use inverse::{spd_inverse, MIN_PIVOT, SYMMETRY_TOLERANCE};
pub use ledger::{FlopLedger, OpCounts, Phase};
pub use multiply::{
    classical_counts, matmul, matmul_in, strassen_counts, ExecMode, MatMulBackend,
    DEFAULT_STRASSEN_THRESHOLD,
};
pub use rational::RationalMatrix;

use crate::error::Result;

/// Exact inverse of a rational matrix; see [`RationalMatrix::inverse`].
pub fn rational_inverse(a: &RationalMatrix) -> Result<RationalMatrix> {
    a.inverse()
}
