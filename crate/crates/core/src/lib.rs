//! Lazy-blocked SparseGPT pruning with exact operation accounting.
//!
//! The crate is organized bottom-up:
//!
//! * [`matrix`]: dense and exact-rational matrices, classical and Strassen
//!   multiplication, SPD inversion, `FMAT1`/CSV I/O and the [`FlopLedger`].
//! * [`hessian`]: the regularized inverse Hessian `(X Xᵀ + λI)⁻¹`.
//! * [`mask`]: per-column saliency scoring and top-k mask selection.
//! * [`pruner`]: the lazy-blocked pruning loop, an eager reference and an exact
//!   rational oracle.
//! * [`costmodel`]: the `ω(1,1,a)` curve and asymptotic cost exponents.
//! * [`bench`]: seeded instances, scaling sweeps, log-log fits and peak-memory probes.

// `!(x > 0.0)` is used on purpose so that NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod costmodel;
mod error;
pub mod hessian;
pub mod mask;
pub mod matrix;
pub mod pruner;

pub use error::{Error, Result};
pub use hessian::{build_inverse_hessian, InverseHessian, Lambda};
pub use mask::{mask_select, saliency, top_k_indices, MaskBlock, SaliencyVector};
pub use matrix::{
    matmul, spd_inverse, DenseMatrix, ExecMode, FlopLedger, MatMulBackend, MatRef, OpCounts, Phase,
    RationalMatrix,
};
pub use pruner::{prune_eager, prune_exact, prune_lazy, Mask, PruneConfig, PruneResult};
