use sparsegpt_core::bench::{
    fit_slopes, generate_instance, run_sweep, snap_block, BenchPlan, Metric,
};
use sparsegpt_core::costmodel::predicted_flops;
use sparsegpt_core::matrix::{DenseMatrix, MatMulBackend, OpCounts, Phase};
use sparsegpt_core::{matmul, prune_lazy, spd_inverse, PruneConfig};

#[test]
fn spd_inverse_residual_at_256() {
    let (g, _) = generate_instance(256, 21);
    let mut c = OpCounts::default();
    let mut a = matmul(
        g.view(),
        g.transpose().view(),
        MatMulBackend::Classical,
        &mut c,
    )
    .unwrap();
    for i in 0..256 {
        a.set(i, i, a.get(i, i) + 1.0);
    }
    let inv = spd_inverse(a.view(), &mut c).unwrap();
    let prod = matmul(inv.view(), a.view(), MatMulBackend::Classical, &mut c).unwrap();
    assert!(prod.max_abs_diff(&DenseMatrix::identity(256)) <= 1e-8);
}

#[test]
fn strassen_outer_counts_drop_below_classical() {
    for (d, b) in [(128usize, 64usize), (256, 64), (256, 128), (512, 128)] {
        let classical = predicted_flops(d, b, MatMulBackend::Classical)
            .unwrap()
            .outer;
        let fast = predicted_flops(d, b, MatMulBackend::Strassen { threshold: b / 2 })
            .unwrap()
            .outer;
        assert!(
            fast.flops() < classical.flops(),
            "d={d} B={b}: {fast:?} vs {classical:?}"
        );
        assert!(fast.mul < classical.mul);
    }
}

#[test]
fn strassen_ledger_matches_prediction() {
    let (w, x) = generate_instance(128, 3);
    let backend = MatMulBackend::Strassen { threshold: 16 };
    let r = prune_lazy(&PruneConfig::new(0.5, 32, 8).with_backend(backend), &w, &x).unwrap();
    assert_eq!(
        r.ledger.phase(Phase::Outer),
        predicted_flops(128, 32, backend).unwrap().outer
    );
}

#[test]
fn inner_slope_at_half_exponent() {
    let sweep = run_sweep(&BenchPlan::new(vec![64, 256, 1024], vec![0.5])).unwrap();
    let inner = fit_slopes(&sweep.records, Phase::Inner, Metric::Mul).unwrap();
    assert!((inner.slope - 2.5).abs() <= 0.05, "{inner:?}");
    let outer = fit_slopes(&sweep.records, Phase::Outer, Metric::Mul).unwrap();
    assert!((outer.slope - 3.0).abs() <= 0.05, "{outer:?}");
    for d in [64usize, 256, 1024] {
        let b = snap_block(d, 0.5);
        assert_eq!(b * b, d);
        let inner = sweep
            .records
            .iter()
            .find(|r| r.d == d && r.phase == Phase::Inner && r.metric == Metric::Mul)
            .unwrap();
        assert_eq!(inner.value as usize, d * d * (b + 1) / 2);
    }
}

#[test]
fn mask_comparisons_stay_within_d2_log_d() {
    for d in [16usize, 64, 256] {
        let (w, x) = generate_instance(d, 9);
        for bs in [1, 4, 16] {
            let r = prune_lazy(&PruneConfig::new(0.5, 16, bs), &w, &x).unwrap();
            let bound = 2.0 * (d * d) as f64 * (d as f64).log2();
            assert!((r.ledger.phase(Phase::Mask).cmp as f64) <= bound);
        }
    }
}
