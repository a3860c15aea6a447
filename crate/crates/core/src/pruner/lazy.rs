use super::{apply_mask, check_inputs, Mask, PhaseTimes, PruneConfig, PruneResult};
use crate::error::Result;
use crate::hessian::build_inverse_hessian_with;
use crate::mask::mask_select;
use crate::matrix::{matmul_in, DenseMatrix, FlopLedger, MatMulBackend, Phase};

/// Prunes `w` with the lazy-blocked schedule.
///
/// Per lazy block `[i, end)`:
/// 1. at each `j ≡ 0 (mod B_s)`, select the mask for `[j, j + B_s)`;
/// 2. write the pruning error `(1 - M[:, j]) ∘ W[:, j] / H̃[j, j]` into column
///    `j - i` of the buffer `E`;
/// 3. subtract `E[:, j - i] · H̃[j, j..end]` from `W[:, j..end]`;
///
/// then subtract `E · H̃[i..end, end..d]` from `W[:, end..d]` with one product
/// on `cfg.backend`, and finally zero every pruned entry.
pub fn prune_lazy(cfg: &PruneConfig, w: &DenseMatrix, x: &DenseMatrix) -> Result<PruneResult> {
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
    let mut err = DenseMatrix::zeros(d, cfg.block);

    for start in (0..d).step_by(cfg.block) {
        let end = (start + cfg.block).min(d);
        let width = end - start;
        err.view_mut().fill(0.0);

        for j in start..end {
            if j % cfg.mask_block == 0 {
                let cols = j..(j + cfg.mask_block).min(d);
                let block = times.time(Phase::Mask, || {
                    mask_select(
                        cfg.sparsity,
                        w.slice(0..d, cols)?,
                        &h,
                        j,
                        cfg.mode,
                        ledger.phase_mut(Phase::Mask),
                    )
                })?;
                mask.write_block(j, &block);
            }

            let t = std::time::Instant::now();
            let hjj = hm.get(j, j);
            let slot = j - start;
            {
                let mut e = err.view_mut();
                for r in 0..d {
                    let pruned = if mask.is_kept(r, j) { 0.0 } else { 1.0 };
                    e.row_mut(r)[slot] = pruned * w.get(r, j) / hjj;
                }
            }
            let counts = ledger.phase_mut(Phase::Error);
            counts.mul += d as u64;
            counts.div += d as u64;
            times.add(Phase::Error, t.elapsed());

            let t = std::time::Instant::now();
            let h_row = &hm.row(j)[j..end];
            let mut wv = w.view_mut();
            for r in 0..d {
                let e = err.get(r, slot);
                if e == 0.0 {
                    continue;
                }
                for (wi, hi) in wv.row_mut(r)[j..end].iter_mut().zip(h_row) {
                    *wi -= e * hi;
                }
            }
            let counts = ledger.phase_mut(Phase::Inner);
            counts.mul += (d * (end - j)) as u64;
            counts.add += (d * (end - j)) as u64;
            times.add(Phase::Inner, t.elapsed());
        }

        if end < d {
            times.time(Phase::Outer, || -> Result<()> {
                let counts = ledger.phase_mut(Phase::Outer);
                let update = matmul_in(
                    cfg.mode,
                    err.slice(0..d, 0..width)?,
                    hm.slice(start..end, end..d)?,
                    cfg.backend,
                    counts,
                )?;
                w.slice_mut(0..d, end..d)?.sub_assign(update.view())?;
                counts.add += (d * (d - end)) as u64;
                Ok(())
            })?;
        }
    }

    times.time(Phase::Finalize, || apply_mask(&mut w, &mask, &mut ledger));

    Ok(PruneResult {
        weights: w,
        mask,
        ledger,
        phase_seconds: times,
        lambda: h.lambda(),
    })
}
