//! Scaling harness: seeded instances, `(d, B, backend)` sweeps, log-log
//! slope fits over the flop ledger and wall time, and peak-memory probes.
//!
//! Acceptance is judged on operation counts, which are exact and
//! reproducible. Wall time is recorded for information only.

mod memory;
mod rng;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

pub use memory::{allocator_installed, memory_probe, peak_bytes_during, TrackingAllocator};
pub use rng::{generate_instance, generate_integer_instance, SplitMix64};

use crate::error::{Error, Result};
use crate::hessian::Lambda;
use crate::matrix::{FlopLedger, MatMulBackend, OpCounts, Phase};
use crate::pruner::{prune_lazy, PruneConfig, PruneResult};

/// What a sweep measures.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub enum MetricSet {
    #[default]
    Flops,
    Walltime,
    Both,
}

impl MetricSet {
    fn flops(self) -> bool {
        matches!(self, MetricSet::Flops | MetricSet::Both)
    }

    fn walltime(self) -> bool {
        matches!(self, MetricSet::Walltime | MetricSet::Both)
    }
}

impl FromStr for MetricSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flops" => Ok(MetricSet::Flops),
            "walltime" => Ok(MetricSet::Walltime),
            "both" => Ok(MetricSet::Both),
            _ => Err(Error::config(format!(
                "unknown metric `{s}` (expected flops, walltime or both)"
            ))),
        }
    }
}

/// One measured quantity of a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mul,
    Add,
    Div,
    Cmp,
    /// `mul + add + div`.
    Flops,
    Seconds,
}

impl Metric {
    pub const COUNTS: [Metric; 5] = [
        Metric::Mul,
        Metric::Add,
        Metric::Div,
        Metric::Cmp,
        Metric::Flops,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mul => "mul",
            Metric::Add => "add",
            Metric::Div => "div",
            Metric::Cmp => "cmp",
            Metric::Flops => "flops",
            Metric::Seconds => "seconds",
        }
    }

    fn of(self, c: OpCounts) -> u64 {
        match self {
            Metric::Mul => c.mul,
            Metric::Add => c.add,
            Metric::Div => c.div,
            Metric::Cmp => c.cmp,
            Metric::Flops => c.flops(),
            Metric::Seconds => unreachable!("seconds are not an operation count"),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sweep over dimensions, block exponents and backends.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    /// Strictly increasing, each at least 8.
    pub dims: Vec<usize>,
    /// Target exponents `a`; the block is `d^a` snapped to a divisor of `d`.
    pub block_exponents: Vec<f64>,
    pub backends: Vec<MatMulBackend>,
    pub repeats: usize,
    pub seed: u64,
    pub metric: MetricSet,
    pub sparsity: f64,
}

impl BenchPlan {
    pub fn new(dims: Vec<usize>, block_exponents: Vec<f64>) -> Self {
        BenchPlan {
            dims,
            block_exponents,
            backends: vec![MatMulBackend::Classical],
            repeats: 1,
            seed: 0,
            metric: MetricSet::Flops,
            sparsity: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(&d) = self.dims.iter().find(|&&d| d < 8) {
            return Err(Error::config(format!(
                "bench dimensions must be at least 8, got {d}"
            )));
        }
        if self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "bench dimensions must be strictly increasing",
            ));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if let Some(&a) = self
            .block_exponents
            .iter()
            .find(|a| !(0.0..=1.0).contains(*a))
        {
            return Err(Error::Domain {
                what: "block exponent a",
                value: a,
                range: 0.0..=1.0,
            });
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::Domain {
                what: "sparsity",
                value: self.sparsity,
                range: 0.0..=1.0,
            });
        }
        self.backends.iter().try_for_each(MatMulBackend::validate)
    }
}

/// `round(d^a)` snapped to the nearest divisor of `d`; ties go to the
/// smaller divisor.
pub fn snap_block(d: usize, a: f64) -> usize {
    assert!(d >= 1, "dimension must be positive");
    let target = (d as f64).powf(a).round().clamp(1.0, d as f64) as usize;
    (1..=d)
        .filter(|b| d.is_multiple_of(*b))
        .min_by_key(|&b| (b.abs_diff(target), b))
        .expect("1 divides d")
}

/// `log_d(B)`; zero for `d = 1`.
pub fn a_effective(d: usize, block: usize) -> f64 {
    if d <= 1 {
        0.0
    } else {
        (block as f64).ln() / (d as f64).ln()
    }
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRecord {
    pub d: usize,
    #[serde(rename = "B")]
    pub block: usize,
    pub a_effective: f64,
    #[serde(serialize_with = "ser_display")]
    pub backend: MatMulBackend,
    #[serde(serialize_with = "ser_display")]
    pub phase: Phase,
    pub metric: Metric,
    #[serde(serialize_with = "ser_value")]
    pub value: f64,
    pub repeat: usize,
}

/// Operation counts are written as integers, seconds as decimals.
fn ser_value<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.fract() == 0.0 && v.abs() < (1u64 << 53) as f64 {
        s.serialize_i64(*v as i64)
    } else {
        s.serialize_f64(*v)
    }
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// A cell whose prune run failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub d: usize,
    pub block: usize,
    pub backend: MatMulBackend,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sweep {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<CellFailure>,
}

struct Cell {
    d: usize,
    block: usize,
    backend: MatMulBackend,
}

/// Runs every `(d, a, backend)` cell `plan.repeats` times on a fresh seeded
/// instance. Zero counts (phases a configuration never enters) are omitted.
///
/// Flop-only sweeps run cells in parallel; sweeps that time anything run
/// them one at a time.
pub fn run_sweep(plan: &BenchPlan) -> Result<Sweep> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &d in &plan.dims {
        for &a in &plan.block_exponents {
            let block = snap_block(d, a);
            for &backend in &plan.backends {
                // Distinct exponents can snap to the same block.
                if !cells
                    .iter()
                    .any(|c: &Cell| c.d == d && c.block == block && c.backend == backend)
                {
                    cells.push(Cell { d, block, backend });
                }
            }
        }
    }

    let outcomes: Vec<Result<std::result::Result<Vec<BenchRecord>, CellFailure>>> =
        if plan.metric.walltime() {
            cells.iter().map(|c| run_cell(plan, c)).collect()
        } else {
            cells.par_iter().map(|c| run_cell(plan, c)).collect()
        };

    let mut sweep = Sweep::default();
    for outcome in outcomes {
        match outcome? {
            Ok(records) => sweep.records.extend(records),
            Err(failure) => sweep.failures.push(failure),
        }
    }
    Ok(sweep)
}

fn run_cell(
    plan: &BenchPlan,
    cell: &Cell,
) -> Result<std::result::Result<Vec<BenchRecord>, CellFailure>> {
    let cfg = PruneConfig::new(plan.sparsity, cell.block, cell.block)
        .with_lambda(Lambda::Fixed(1.0))
        .with_backend(cell.backend);
    let (w, x) = generate_instance(cell.d, plan.seed);
    let a_eff = a_effective(cell.d, cell.block);
    let mut records = Vec::new();
    let mut first: Option<FlopLedger> = None;

    for repeat in 0..plan.repeats {
        let result: PruneResult = match prune_lazy(&cfg, &w, &x) {
            Ok(r) => r,
            Err(e) => {
                return Ok(Err(CellFailure {
                    d: cell.d,
                    block: cell.block,
                    backend: cell.backend,
                    message: e.to_string(),
                }))
            }
        };
        match &first {
            None => first = Some(result.ledger.clone()),
            Some(l) if *l != result.ledger => {
                return Err(Error::NonReproducible {
                    d: cell.d,
                    block: cell.block,
                })
            }
            Some(_) => {}
        }
        let mut push = |phase, metric, value: f64| {
            records.push(BenchRecord {
                d: cell.d,
                block: cell.block,
                a_effective: a_eff,
                backend: cell.backend,
                phase,
                metric,
                value,
                repeat,
            })
        };
        for (phase, counts) in result.ledger.iter() {
            if plan.metric.flops() {
                for metric in Metric::COUNTS {
                    let v = metric.of(counts);
                    if v > 0 {
                        push(phase, metric, v as f64);
                    }
                }
            }
            if plan.metric.walltime() && !counts.is_zero() {
                push(phase, Metric::Seconds, result.phase_seconds.get(phase));
            }
        }
    }
    Ok(Ok(records))
}

/// Writes records as CSV with header `d,B,a_effective,backend,phase,metric,value,repeat`.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    if records.is_empty() {
        wtr.write_record([
            "d",
            "B",
            "a_effective",
            "backend",
            "phase",
            "metric",
            "value",
            "repeat",
        ])
        .map_err(csv_err)?;
    }
    for r in records {
        wtr.serialize(r).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Least-squares line through `(ln d, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    #[serde(serialize_with = "ser_display")]
    pub phase: Phase,
    pub metric: Metric,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln value = slope · ln d + intercept` over the records of `phase`
/// and `metric` with positive values. Callers filter to a single block
/// exponent and backend beforehand.
pub fn fit_slopes(records: &[BenchRecord], phase: Phase, metric: Metric) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.phase == phase && r.metric == metric && r.value > 0.0)
        .map(|r| ((r.d as f64).ln(), r.value.ln()))
        .collect();
    let mut dims: Vec<usize> = records
        .iter()
        .filter(|r| r.phase == phase && r.metric == metric && r.value > 0.0)
        .map(|r| r.d)
        .collect();
    dims.sort_unstable();
    dims.dedup();
    if dims.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: dims.len(),
        });
    }

    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if syy <= f64::EPSILON * n * my.abs().max(1.0) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        phase,
        metric,
        slope,
        intercept,
        r_squared,
        points: pts.len(),
    })
}

/// Minimum and median seconds across repeats of one `(d, B, backend, phase)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallTime {
    pub d: usize,
    pub block: usize,
    #[serde(serialize_with = "ser_display")]
    pub backend: MatMulBackend,
    #[serde(serialize_with = "ser_display")]
    pub phase: Phase,
    pub min: f64,
    pub median: f64,
}

pub fn walltime_summary(records: &[BenchRecord]) -> Vec<WallTime> {
    let mut out: Vec<(WallTime, Vec<f64>)> = Vec::new();
    for r in records.iter().filter(|r| r.metric == Metric::Seconds) {
        let key = |w: &WallTime| {
            w.d == r.d && w.block == r.block && w.backend == r.backend && w.phase == r.phase
        };
        match out.iter_mut().find(|(w, _)| key(w)) {
            Some((_, v)) => v.push(r.value),
            None => out.push((
                WallTime {
                    d: r.d,
                    block: r.block,
                    backend: r.backend,
                    phase: r.phase,
                    min: 0.0,
                    median: 0.0,
                },
                vec![r.value],
            )),
        }
    }
    out.into_iter()
        .map(|(mut w, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            w.min = v[0];
            w.median = if n % 2 == 1 {
                v[n / 2]
            } else {
                (v[n / 2 - 1] + v[n / 2]) / 2.0
            };
            w
        })
        .collect()
}
