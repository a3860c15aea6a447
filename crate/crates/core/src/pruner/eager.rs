use super::{apply_mask, check_inputs, Mask, PhaseTimes, PruneConfig, PruneResult};
use crate::error::Result;
use crate::hessian::build_inverse_hessian_with;
use crate::mask::mask_select;
use crate::matrix::{DenseMatrix, FlopLedger, MatMulBackend, Phase};

/// Reference pruner without lazy batching: each pruning error is applied to
/// every remaining column as soon as it is known. `cfg.block` is ignored
/// beyond validation; all rank-1 work is booked under [`Phase::Inner`].
pub fn prune_eager(cfg: &PruneConfig, w: &DenseMatrix, x: &DenseMatrix) -> Result<PruneResult> {
    let d = check_inputs(cfg, w, x)?;
    let mut ledger = FlopLedger::new();
    let mut times = PhaseTimes::default();

    let h = times.time(Phase::Hessian, || {
        build_inverse_hessian_with(
            x,
            cfg.lambda,
            MatMulBackend::Classical,
            cfg.mode,
            ledger.phase_mut(Phase::Hessian),
        )
    })?;
    let hm = h.matrix();

    let mut w = w.clone();
    let mut mask = Mask::all_kept(d, d);
    let mut err = vec![0.0; d];

    for j in 0..d {
        if j % cfg.mask_block == 0 {
            let cols = j..(j + cfg.mask_block).min(d);
            let block = mask_select(
                cfg.sparsity,
                w.slice(0..d, cols)?,
                &h,
                j,
                cfg.mode,
                ledger.phase_mut(Phase::Mask),
            )?;
            mask.write_block(j, &block);
        }

        let hjj = hm.get(j, j);
        for (r, e) in err.iter_mut().enumerate() {
            *e = if mask.is_kept(r, j) {
                0.0
            } else {
                w.get(r, j) / hjj
            };
        }
        let c = ledger.phase_mut(Phase::Error);
        c.mul += d as u64;
        c.div += d as u64;

        let h_row = &hm.row(j)[j..];
        let mut wv = w.view_mut();
        for (r, &e) in err.iter().enumerate() {
            if e != 0.0 {
                for (wi, hi) in wv.row_mut(r)[j..].iter_mut().zip(h_row) {
                    *wi -= e * hi;
                }
            }
        }
        let c = ledger.phase_mut(Phase::Inner);
        c.mul += (d * (d - j)) as u64;
        c.add += (d * (d - j)) as u64;
    }

    apply_mask(&mut w, &mask, &mut ledger);

    Ok(PruneResult {
        weights: w,
        mask,
        ledger,
        phase_seconds: times,
        lambda: h.lambda(),
    })
}
