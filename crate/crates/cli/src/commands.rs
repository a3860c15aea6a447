use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;
use sparsegpt_core::bench::{
    a_effective, fit_slopes, generate_instance, run_sweep, snap_block, walltime_summary, write_csv,
    BenchPlan, BenchRecord, Metric, MetricSet,
};
use sparsegpt_core::costmodel::{cost_report, optimize_block_exponent, OmegaCurve};
use sparsegpt_core::matrix::io::{load_matrix, save_matrix};
use sparsegpt_core::pruner::ORACLE_LIMIT;
use sparsegpt_core::{
    prune_eager, prune_exact, prune_lazy, Error, Lambda, Phase, PruneConfig, RationalMatrix,
};

use crate::{BenchArgs, CostmodelArgs, PruneArgs, VerifyArgs};

const VERIFY_TOLERANCE: f64 = 1e-9;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Format(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn reading(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure::usage(format!("cannot read {}: {e}", path.display()))
}

fn writing(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure::usage(format!("cannot write {}: {e}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let io = |e: std::io::Error| writing(path)(e.into());
    let mut f = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io(e.into()))?;
    writeln!(f).and_then(|_| f.flush()).map_err(io)
}

pub fn prune(args: PruneArgs) -> Result<(), Failure> {
    let cfg = PruneConfig::new(args.sparsity, args.block, args.mask_block)
        .with_lambda(args.lambda)
        .with_backend(args.backend)
        .with_mode(args.mode.into());
    // Everything except B ≤ d can be checked before touching the files.
    cfg.validate(usize::MAX)?;

    let w = load_matrix(&args.weights).map_err(reading(&args.weights))?;
    let x = load_matrix(&args.calib).map_err(reading(&args.calib))?;
    let r = prune_lazy(&cfg, &w, &x)?;

    save_matrix(&r.weights, &args.out).map_err(writing(&args.out))?;
    if let Some(path) = &args.mask_out {
        save_matrix(&r.mask.to_matrix(), path).map_err(writing(path))?;
    }
    if let Some(path) = &args.stats {
        let stats = json!({
            "schema": 1,
            "config": {
                "d": w.rows(),
                "calibration_samples": x.cols(),
                "sparsity": cfg.sparsity,
                "block": cfg.block,
                "mask_block": cfg.mask_block,
                "lambda": cfg.lambda.to_string(),
                "lambda_used": r.lambda,
                "backend": cfg.backend.to_string(),
                "mode": cfg.mode,
            },
            "flops": r.ledger,
            "total": r.ledger.total(),
            "seconds": r.phase_seconds,
            "achieved_sparsity": r.mask.sparsity(),
        });
        write_json(path, &stats)?;
    }

    let d = w.rows();
    println!(
        "pruned {d}x{d}: {} of {} weights zeroed (sparsity {:.4}), {} flops, {:.3}s",
        d * d - r.mask.kept(),
        d * d,
        r.mask.sparsity(),
        r.ledger.total().flops(),
        r.phase_seconds.total()
    );
    Ok(())
}

pub fn verify(args: VerifyArgs) -> Result<(), Failure> {
    if args.oracle && args.d > ORACLE_LIMIT {
        return Err(Failure::usage(format!(
            "oracle limited to d ≤ {ORACLE_LIMIT} (got --d {})",
            args.d
        )));
    }
    let cfg = PruneConfig::new(args.sparsity, args.block, args.mask_block)
        .with_lambda(Lambda::Fixed(1.0));
    cfg.validate(args.d)?;

    let (w, x) = generate_instance(args.d, args.seed);
    let lazy = prune_lazy(&cfg, &w, &x)?;
    let eager = prune_eager(&cfg, &w, &x)?;

    println!(
        "instance  d={} seed={} sparsity={} B={} B_s={} lambda=1",
        args.d, args.seed, args.sparsity, args.block, args.mask_block
    );
    let mut failures = Vec::new();
    let mut compare = |name: &str, delta: f64, same_mask: bool| {
        println!(
            "{name:<14} max |ΔW| = {delta:.3e}  masks {}",
            if same_mask { "identical" } else { "DIFFER" }
        );
        if !same_mask {
            failures.push(format!("{name}: masks differ"));
        }
        if !(delta <= VERIFY_TOLERANCE) {
            failures.push(format!(
                "{name}: max |ΔW| {delta:e} exceeds {VERIFY_TOLERANCE:e}"
            ));
        }
    };
    compare(
        "lazy vs eager",
        lazy.weights.max_abs_diff(&eager.weights),
        lazy.mask == eager.mask,
    );
    if args.oracle {
        let exact = prune_exact(
            &cfg,
            &RationalMatrix::from_dense(&w),
            &RationalMatrix::from_dense(&x),
        )?;
        compare(
            "lazy vs exact",
            lazy.weights.max_abs_diff(&exact.weights.to_dense()),
            lazy.mask == exact.mask,
        );
    }

    let outer = lazy.ledger.phase(Phase::Outer);
    println!(
        "outer-phase flops: {} (mul {}, add {})",
        outer.flops(),
        outer.mul,
        outer.add
    );
    let inner = lazy.ledger.phase(Phase::Inner);
    println!(
        "inner-phase flops: {} (mul {}, add {})",
        inner.flops(),
        inner.mul,
        inner.add
    );

    if failures.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(Failure::numerical(failures.join("; ")))
    }
}

struct FitRow {
    a: f64,
    backend: String,
    fit: sparsegpt_core::bench::SlopeFit,
}

pub fn bench(args: BenchArgs) -> Result<(), Failure> {
    let plan = BenchPlan {
        dims: args.dims,
        block_exponents: args.a,
        backends: args.backend,
        repeats: args.repeats,
        seed: args.seed,
        metric: args.metric,
        sparsity: 0.5,
    };
    let sweep = run_sweep(&plan)?;
    for f in &sweep.failures {
        eprintln!(
            "cell d={} B={} {} failed: {}",
            f.d, f.block, f.backend, f.message
        );
    }

    let mut rows = Vec::new();
    if plan.dims.len() < 3 {
        eprintln!(
            "slope fitting skipped: needs at least 3 dimensions, got {}",
            plan.dims.len()
        );
    } else {
        let mut metrics = Vec::new();
        if matches!(plan.metric, MetricSet::Flops | MetricSet::Both) {
            metrics.push(Metric::Flops);
        }
        if matches!(plan.metric, MetricSet::Walltime | MetricSet::Both) {
            metrics.push(Metric::Seconds);
        }
        for &a in &plan.block_exponents {
            for &backend in &plan.backends {
                let recs: Vec<BenchRecord> = sweep
                    .records
                    .iter()
                    .filter(|r| r.block == snap_block(r.d, a) && r.backend == backend)
                    .copied()
                    .collect();
                for phase in Phase::ALL {
                    let mut wanted = metrics.clone();
                    if phase == Phase::Mask && plan.metric != MetricSet::Walltime {
                        wanted.push(Metric::Cmp);
                    }
                    for metric in wanted {
                        // Phases a configuration never enters have nothing to fit.
                        if let Ok(fit) = fit_slopes(&recs, phase, metric) {
                            rows.push(FitRow {
                                a,
                                backend: backend.to_string(),
                                fit,
                            });
                        }
                    }
                }
            }
        }
        print_fits(&plan, &rows);
    }

    if plan.metric != MetricSet::Flops {
        println!(
            "\n{:>6} {:>5} {:<12} {:<9} {:>12} {:>12}",
            "d", "B", "backend", "phase", "min s", "median s"
        );
        for w in walltime_summary(&sweep.records) {
            println!(
                "{:>6} {:>5} {:<12} {:<9} {:>12.6} {:>12.6}",
                w.d,
                w.block,
                w.backend.to_string(),
                w.phase.name(),
                w.min,
                w.median
            );
        }
    }

    if let Some(path) = &args.out {
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            let fits: Vec<_> = rows
                .iter()
                .map(|r| json!({"a": r.a, "backend": r.backend, "fit": r.fit}))
                .collect();
            let failures: Vec<_> = sweep
                .failures
                .iter()
                .map(|f| json!({"d": f.d, "B": f.block, "backend": f.backend.to_string(), "error": f.message}))
                .collect();
            write_json(
                path,
                &json!({"schema": 1, "records": sweep.records, "fits": fits, "failures": failures}),
            )?;
        } else {
            let f = File::create(path).map_err(|e| writing(path)(e.into()))?;
            write_csv(&sweep.records, BufWriter::new(f)).map_err(writing(path))?;
        }
    }

    if sweep.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(format!(
            "{} bench cell(s) failed",
            sweep.failures.len()
        )))
    }
}

fn print_fits(plan: &BenchPlan, rows: &[FitRow]) {
    for &a in &plan.block_exponents {
        let effective: Vec<String> = plan
            .dims
            .iter()
            .map(|&d| {
                let b = snap_block(d, a);
                format!("d={d}: B={b} a={:.3}", a_effective(d, b))
            })
            .collect();
        println!("a = {a}  ({})", effective.join(", "));
    }
    println!(
        "{:>5} {:<12} {:<9} {:<8} {:>8} {:>10} {:>8}",
        "a", "backend", "phase", "metric", "slope", "intercept", "r2"
    );
    for r in rows {
        println!(
            "{:>5} {:<12} {:<9} {:<8} {:>8.4} {:>10.4} {:>8.5}",
            r.a,
            r.backend,
            r.fit.phase.name(),
            r.fit.metric.name(),
            r.fit.slope,
            r.fit.intercept,
            r.fit.r_squared
        );
    }
}

pub fn costmodel(args: CostmodelArgs) -> Result<(), Failure> {
    let curve = match &args.omega_table {
        Some(path) => OmegaCurve::load(path).map_err(reading(path))?,
        None => OmegaCurve::default_curve(),
    };
    let anchors: Vec<String> = curve
        .anchors()
        .iter()
        .map(|p| format!("({}, {})", p.a, p.omega))
        .collect();
    println!("curve     {}", anchors.join(" "));
    println!("omega     {}   alpha {}", curve.omega(), curve.alpha());

    let report = match args.a {
        Some(a) => cost_report(&curve, a)?,
        None => {
            let opt = optimize_block_exponent(&curve, args.grid)?;
            println!("a*        {:.4}", opt.a);
            opt.report
        }
    };
    println!(
        "terms     hessian {:.4}  inner {:.4}  outer {:.4}",
        report.term_hessian, report.term_inner, report.term_outer
    );
    println!("exponent  {:.4}   (a = {:.4})", report.total, report.a);
    Ok(())
}
