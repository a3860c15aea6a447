use proptest::prelude::*;
use sparsegpt_core::bench::{generate_instance, generate_integer_instance};
use sparsegpt_core::matrix::{ExecMode, MatMulBackend, Phase};
use sparsegpt_core::{prune_eager, prune_exact, prune_lazy, Lambda, PruneConfig, PruneResult};

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|b| n.is_multiple_of(*b)).collect()
}

fn bits(r: &PruneResult) -> Vec<u64> {
    r.weights.as_slice().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn seeded_integer_instance_matches_oracle() {
    let (wq, xq) = generate_integer_instance(8, 1, -4, 4);
    let cfg = PruneConfig::new(0.5, 4, 2).with_lambda(Lambda::Fixed(1.0));
    let exact = prune_exact(&cfg, &wq, &xq).unwrap();
    let lazy = prune_lazy(&cfg, &wq.to_dense(), &xq.to_dense()).unwrap();
    assert_eq!(lazy.mask, exact.mask);
    assert!(lazy.weights.max_abs_diff(&exact.weights.to_dense()) <= 1e-9);
}

#[test]
fn oracle_is_independent_of_lazy_block() {
    let (wq, xq) = generate_integer_instance(6, 5, -4, 4);
    let base = prune_exact(
        &PruneConfig::new(0.5, 1, 1).with_lambda(Lambda::Fixed(1.0)),
        &wq,
        &xq,
    )
    .unwrap();
    for b in [2, 3, 6] {
        let cfg = PruneConfig::new(0.5, b, 1).with_lambda(Lambda::Fixed(1.0));
        assert_eq!(prune_exact(&cfg, &wq, &xq).unwrap(), base, "B = {b}");
    }
}

#[test]
fn partial_final_block_matches_oracle() {
    // B does not divide d: blocks [0,4), [4,8), [8,10).
    let (wq, xq) = generate_integer_instance(10, 3, -4, 4);
    let cfg = PruneConfig::new(0.5, 4, 2).with_lambda(Lambda::Fixed(1.0));
    let exact = prune_exact(&cfg, &wq, &xq).unwrap();
    let lazy = prune_lazy(&cfg, &wq.to_dense(), &xq.to_dense()).unwrap();
    assert_eq!(lazy.mask, exact.mask);
    assert!(lazy.weights.max_abs_diff(&exact.weights.to_dense()) <= 1e-9);
}

#[test]
fn eager_matches_lazy_on_seeded_instance() {
    let (w, x) = generate_instance(8, 11);
    let cfg = PruneConfig::new(0.5, 4, 2);
    let lazy = prune_lazy(&cfg, &w, &x).unwrap();
    let eager = prune_eager(&cfg, &w, &x).unwrap();
    assert_eq!(lazy.mask, eager.mask);
    assert!(lazy.weights.max_abs_diff(&eager.weights) <= 1e-9);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (w, x) = generate_instance(48, 2);
    for backend in [
        MatMulBackend::Classical,
        MatMulBackend::Strassen { threshold: 8 },
    ] {
        let cfg = PruneConfig::new(0.5, 8, 4).with_backend(backend);
        let a = prune_lazy(&cfg, &w, &x).unwrap();
        let b = prune_lazy(&cfg, &w, &x).unwrap();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.ledger, b.ledger);
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
    }
}

#[test]
fn performance_mode_changes_nothing_for_classical() {
    let (w, x) = generate_instance(96, 4);
    let cfg = PruneConfig::new(0.5, 16, 8);
    let det = prune_lazy(&cfg, &w, &x).unwrap();
    let perf = prune_lazy(&cfg.with_mode(ExecMode::Performance), &w, &x).unwrap();
    assert_eq!(bits(&det), bits(&perf));
    assert_eq!(det.mask, perf.mask);
    assert_eq!(det.ledger, perf.ledger);
}

#[test]
fn strassen_outer_update_agrees_with_classical() {
    let (w, x) = generate_instance(64, 8);
    let cfg = PruneConfig::new(0.5, 16, 4);
    let classical = prune_lazy(&cfg, &w, &x).unwrap();
    let fast = prune_lazy(
        &cfg.with_backend(MatMulBackend::Strassen { threshold: 2 }),
        &w,
        &x,
    )
    .unwrap();
    assert_eq!(classical.mask, fast.mask);
    assert!(classical.weights.max_abs_diff(&fast.weights) <= 1e-9);
    assert_ne!(
        classical.ledger.phase(Phase::Outer),
        fast.ledger.phase(Phase::Outer)
    );
}

#[test]
fn one_by_one_pipeline() {
    let (w, x) = generate_instance(1, 0);
    for p in [0.0, 1.0] {
        let r = prune_lazy(&PruneConfig::new(p, 1, 1), &w, &x).unwrap();
        assert_eq!(r.mask.kept(), if p == 0.0 { 1 } else { 0 });
    }
}

#[test]
fn block_equal_to_d_has_zero_outer_counts() {
    let (w, x) = generate_instance(32, 6);
    let r = prune_lazy(&PruneConfig::new(0.25, 32, 8), &w, &x).unwrap();
    assert!(r.ledger.phase(Phase::Outer).is_zero());
}

fn tiling() -> impl Strategy<Value = (usize, usize, usize)> {
    prop::sample::select(vec![2usize, 3, 4, 6, 8]).prop_flat_map(|d| {
        prop::sample::select(divisors(d)).prop_flat_map(move |b| {
            prop::sample::select(divisors(b)).prop_map(move |bs| (d, b, bs))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lazy_matches_exact_oracle(
        (d, b, bs) in tiling(),
        seed in any::<u64>(),
        p in prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]),
    ) {
        let (wq, xq) = generate_integer_instance(d, seed, -4, 4);
        let cfg = PruneConfig::new(p, b, bs).with_lambda(Lambda::Fixed(1.0));
        let exact = prune_exact(&cfg, &wq, &xq).unwrap();
        let lazy = prune_lazy(&cfg, &wq.to_dense(), &xq.to_dense()).unwrap();
        prop_assert_eq!(&lazy.mask, &exact.mask);
        prop_assert!(lazy.weights.max_abs_diff(&exact.weights.to_dense()) <= 1e-9);
    }

    #[test]
    fn lazy_matches_eager(
        d in 2usize..40,
        seed in any::<u64>(),
        p in 0.0f64..=1.0,
        pick in any::<prop::sample::Index>(),
    ) {
        let (w, x) = generate_instance(d, seed);
        let tilings: Vec<(usize, usize)> = divisors(d)
            .into_iter()
            .flat_map(|b| divisors(b).into_iter().map(move |bs| (b, bs)))
            .collect();
        let (b, bs) = tilings[pick.index(tilings.len())];
        let cfg = PruneConfig::new(p, b, bs);
        let lazy = prune_lazy(&cfg, &w, &x).unwrap();
        let eager = prune_eager(&cfg, &w, &x).unwrap();
        prop_assert_eq!(&lazy.mask, &eager.mask);
        prop_assert!(lazy.weights.max_abs_diff(&eager.weights) <= 1e-9);
        for c in 0..d {
            for r in 0..d {
                if !lazy.mask.is_kept(r, c) {
                    prop_assert_eq!(lazy.weights.get(r, c).to_bits(), 0);
                }
            }
        }
    }
}
