//! Asymptotic cost model of the lazy-blocked pruner.
//!
//! With lazy block size `B = d^a` the run time decomposes into three
//! exponents: the inverse Hessian (`ω`), the inner rank-1 updates (`2 + a`)
//! and the batched outer updates (`1 + ω(1,1,a) - a`), where `d^{ω(1,1,a)}`
//! is the cost of multiplying a `d × d` matrix by a `d × d^a` matrix. The
//! model only ever evaluates `ω(1,1,a)`; the cost of `(d × d^a)·(d^a × d)`
//! differs from it by a constant factor and is not modelled separately.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{classical_counts, strassen_counts, MatMulBackend, OpCounts};

/// Square matrix multiplication exponent used by the default curve.
pub const OMEGA: f64 = 2.371;
/// Dual exponent: `ω(1,1,a) = 2` for every `a ≤ ALPHA`.
pub const ALPHA: f64 = 0.321;
/// Default grid step of [`optimize_block_exponent`].
pub const DEFAULT_GRID_STEP: f64 = 1e-4;

/// Strict improvements smaller than this are treated as ties.
const TIE_EPS: f64 = 1e-12;

/// One anchor of an [`OmegaCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub a: f64,
    pub omega: f64,
}

/// Piecewise-linear `a ↦ ω(1,1,a)` on `[0, 1]`.
///
/// Anchors are sorted by strictly increasing `a`, start at `(0, 2)`, end at
/// `a = 1`, are non-decreasing, and never exceed the classical bound `2 + a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaCurve {
    anchors: Vec<Anchor>,
}

impl OmegaCurve {
    pub fn new(mut anchors: Vec<Anchor>) -> Result<Self> {
        anchors.sort_by(|x, y| x.a.total_cmp(&y.a));
        let bad = |msg: String| Err(Error::Format(format!("invalid omega curve: {msg}")));
        for p in &anchors {
            if !(0.0..=1.0).contains(&p.a) || !(2.0..=3.0).contains(&p.omega) {
                return bad(format!(
                    "anchor ({}, {}) outside [0,1] x [2,3]",
                    p.a, p.omega
                ));
            }
            if p.omega > 2.0 + p.a + 1e-12 {
                return bad(format!("ω(1,1,{}) = {} exceeds 2 + a", p.a, p.omega));
            }
        }
        match (anchors.first(), anchors.last()) {
            (Some(first), Some(last)) if first.a == 0.0 && last.a == 1.0 => {
                if first.omega != 2.0 {
                    return bad(format!("ω(1,1,0) must be 2, got {}", first.omega));
                }
            }
            _ => return bad("anchors must include a = 0 and a = 1".into()),
        }
        for pair in anchors.windows(2) {
            if pair[0].a == pair[1].a {
                return bad(format!("duplicate anchor at a = {}", pair[0].a));
            }
            if pair[1].omega < pair[0].omega {
                return bad(format!(
                    "ω decreases between a = {} and a = {}",
                    pair[0].a, pair[1].a
                ));
            }
        }
        Ok(OmegaCurve { anchors })
    }

    /// `{(0, 2), (α, 2), (1, ω)}` with `α = 0.321`, `ω = 2.371`.
    pub fn default_curve() -> Self {
        Self::from_pairs(&[(0.0, 2.0), (ALPHA, 2.0), (1.0, OMEGA)])
    }

    /// `ω(1,1,a) = 2 + a`: schoolbook multiplication.
    pub fn classical() -> Self {
        Self::from_pairs(&[(0.0, 2.0), (1.0, 3.0)])
    }

    /// Default curve refined with an anchor at `a = 0.5275`, placed so the
    /// outer-update exponent there is `1 + ω(1,1,a) - a = 2.53`.
    pub fn refined() -> Self {
        Self::default_curve()
            .with_anchor(0.5275, 2.0575)
            .expect("refined anchor is valid")
    }

    fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|&(a, omega)| Anchor { a, omega })
                .collect(),
        )
        .expect("built-in curve is valid")
    }

    /// Adds (or replaces) one anchor and revalidates.
    pub fn with_anchor(&self, a: f64, omega: f64) -> Result<Self> {
        let mut anchors: Vec<Anchor> = self.anchors.iter().copied().filter(|p| p.a != a).collect();
        anchors.push(Anchor { a, omega });
        Self::new(anchors)
    }

    /// Reads a CSV table with header `a,omega`.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["a", "omega"] {
            return Err(Error::Format(format!(
                "omega table header must be `a,omega`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let anchors = rdr
            .deserialize::<Anchor>()
            .map(|row| row.map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(anchors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    /// `ω(1,1,a)` by linear interpolation between anchors.
    pub fn eval(&self, a: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain {
                what: "block exponent a",
                value: a,
                range: 0.0..=1.0,
            });
        }
        let i = self.anchors.partition_point(|p| p.a < a);
        if i < self.anchors.len() && self.anchors[i].a == a {
            return Ok(self.anchors[i].omega);
        }
        let (lo, hi) = (self.anchors[i - 1], self.anchors[i]);
        let t = (a - lo.a) / (hi.a - lo.a);
        Ok(lo.omega + t * (hi.omega - lo.omega))
    }

    /// `ω = ω(1,1,1)`.
    pub fn omega(&self) -> f64 {
        self.anchors.last().expect("curve has anchors").omega
    }

    /// Largest `a` with `ω(1,1,a) = 2`.
    pub fn alpha(&self) -> f64 {
        self.anchors
            .iter()
            .take_while(|p| p.omega == 2.0)
            .last()
            .map_or(0.0, |p| p.a)
    }
}

/// The three cost exponents at block exponent `a` and their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub a: f64,
    /// `ω`: forming and inverting the Hessian.
    pub term_hessian: f64,
    /// `2 + a`: rank-1 updates inside the lazy blocks.
    pub term_inner: f64,
    /// `1 + ω(1,1,a) - a`: one `d × d^a` by `d^a × d` product per block.
    pub term_outer: f64,
    pub total: f64,
}

pub fn cost_report(curve: &OmegaCurve, a: f64) -> Result<CostReport> {
    let w = curve.eval(a)?;
    let term_hessian = curve.omega();
    let term_inner = 2.0 + a;
    let term_outer = 1.0 + w - a;
    Ok(CostReport {
        a,
        term_hessian,
        term_inner,
        term_outer,
        total: term_hessian.max(term_inner).max(term_outer),
    })
}

/// Minimizer of [`cost_report`]`.total` over the grid `0, step, 2·step, …, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub a: f64,
    pub total: f64,
    pub report: CostReport,
}

/// Grid search for the block exponent with the smallest total exponent.
/// Ties (within `1e-12`) go to the smaller `a`.
pub fn optimize_block_exponent(curve: &OmegaCurve, step: f64) -> Result<Optimum> {
    if !(step > 0.0 && step <= 0.01) {
        return Err(Error::Domain {
            what: "grid step",
            value: step,
            range: f64::MIN_POSITIVE..=0.01,
        });
    }
    let n = (1.0 / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(1.0)).collect();
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }
    let mut best: Option<CostReport> = None;
    for a in grid {
        let r = cost_report(curve, a)?;
        if best.is_none_or(|b| r.total < b.total - TIE_EPS) {
            best = Some(r);
        }
    }
    let report = best.expect("grid is non-empty");
    Ok(Optimum {
        a: report.a,
        total: report.total,
        report,
    })
}

/// Closed-form operation counts of the update phases for a `d × d` prune
/// with lazy block `block` dividing `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredictedFlops {
    pub error: OpCounts,
    pub inner: OpCounts,
    pub outer: OpCounts,
    pub finalize: OpCounts,
}

/// Per-phase counts the pruner's ledger must report.
///
/// Classical: inner = outer-free rank-1 work `d²(B+1)/2` multiplications
/// (and as many subtractions), outer = `d²(d-B)/2` multiplications and as
/// many additions, error = `d²` multiplications and `d²` divisions,
/// finalize = `d²` multiplications. Under Strassen the outer phase is summed
/// block by block from [`strassen_counts`].
pub fn predicted_flops(d: usize, block: usize, backend: MatMulBackend) -> Result<PredictedFlops> {
    if block == 0 || d == 0 || !d.is_multiple_of(block) {
        return Err(Error::config(format!("block {block} must divide d = {d}")));
    }
    backend.validate()?;
    let (d64, b64) = (d as u64, block as u64);
    let sq = d64 * d64;
    let inner_mul = sq * (b64 + 1) / 2;
    let outer = match backend {
        MatMulBackend::Classical => {
            let m = sq * (d64 - b64) / 2;
            OpCounts::new(m, m, 0, 0)
        }
        MatMulBackend::Strassen { threshold } => (1..d / block)
            .map(|k| {
                let rest = d - k * block;
                let mut c = if rest > 0 {
                    strassen_counts(d, block, rest, threshold)
                } else {
                    OpCounts::ZERO
                };
                c.add += (d * rest) as u64;
                c
            })
            .sum(),
    };
    Ok(PredictedFlops {
        error: OpCounts::new(sq, 0, sq, 0),
        inner: OpCounts::new(inner_mul, inner_mul, 0, 0),
        outer,
        finalize: OpCounts::new(sq, 0, 0, 0),
    })
}

/// Classical outer-phase count summed block by block; equals `d²(d-B)/2`
/// multiplications when `B | d`.
pub fn classical_outer_by_blocks(d: usize, block: usize) -> OpCounts {
    (1..d.div_ceil(block))
        .map(|k| {
            let rest = d - (k * block).min(d);
            let width = block.min(d - (k - 1) * block);
            let mut c = classical_counts(d, width, rest);
            c.add += (d * rest) as u64;
            c
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn default_curve_values() {
        let c = OmegaCurve::default_curve();
        assert_eq!(c.eval(0.321).unwrap(), 2.0);
        assert_eq!(c.eval(0.1).unwrap(), 2.0);
        assert_eq!(c.eval(1.0).unwrap(), 2.371);
        assert!(close(c.eval(0.6605).unwrap(), 2.1855, 1e-12));
        assert_eq!(c.alpha(), 0.321);
        assert_eq!(c.omega(), 2.371);
        assert!(matches!(c.eval(1.1), Err(Error::Domain { .. })));
        assert!(matches!(c.eval(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn report_examples() {
        let c = OmegaCurve::default_curve();
        let r = cost_report(&c, 1.0).unwrap();
        assert_eq!((r.term_hessian, r.term_inner), (2.371, 3.0));
        assert!(close(r.term_outer, 2.371, 1e-12));
        assert_eq!(r.total, 3.0);

        let r = cost_report(&c, 0.0).unwrap();
        assert_eq!((r.term_inner, r.term_outer, r.total), (2.0, 3.0, 3.0));

        let r = cost_report(&OmegaCurve::refined(), 0.5275).unwrap();
        assert!(close(r.total, 2.53, 1e-9));
        assert!(close(r.term_inner, 2.5275, 1e-12));
    }

    #[test]
    fn optimum_of_default_curve() {
        // Outer term on (α, 1]: 3 - a + (a - α)(ω - 2)/(1 - α); equate with 2 + a.
        let slope = (OMEGA - 2.0) / (1.0 - ALPHA);
        let a_star = (1.0 - slope * ALPHA) / (2.0 - slope);
        assert!(close(a_star, 0.5673, 1e-4));
        let opt = optimize_block_exponent(&OmegaCurve::default_curve(), DEFAULT_GRID_STEP).unwrap();
        assert!(close(opt.a, a_star, 1e-4), "{opt:?}");
        assert!(close(opt.total, 2.0 + a_star, 1e-4));
    }

    #[test]
    fn optimum_of_refined_curve() {
        let opt = optimize_block_exponent(&OmegaCurve::refined(), DEFAULT_GRID_STEP).unwrap();
        assert!(close(opt.a, 0.5275, 0.005), "{opt:?}");
        assert!(close(opt.total, 2.53, 0.005));
    }

    #[test]
    fn classical_curve_is_cubic_everywhere() {
        let c = OmegaCurve::classical();
        for k in 0..=100 {
            assert!(close(
                cost_report(&c, k as f64 / 100.0).unwrap().total,
                3.0,
                1e-12
            ));
        }
        let opt = optimize_block_exponent(&c, 0.01).unwrap();
        assert_eq!(opt.a, 0.0);
        assert_eq!(opt.total, 3.0);
    }

    #[test]
    fn grid_step_bounds() {
        let c = OmegaCurve::default_curve();
        assert!(optimize_block_exponent(&c, 0.0).is_err());
        assert!(optimize_block_exponent(&c, 0.02).is_err());
        assert!(optimize_block_exponent(&c, 0.003).is_ok());
    }

    #[test]
    fn curve_validation() {
        let mk = |pairs: &[(f64, f64)]| {
            OmegaCurve::new(
                pairs
                    .iter()
                    .map(|&(a, omega)| Anchor { a, omega })
                    .collect(),
            )
        };
        assert!(mk(&[(0.0, 2.0), (1.0, 2.5)]).is_ok());
        assert!(mk(&[(0.0, 2.1), (1.0, 2.5)]).is_err());
        assert!(mk(&[(0.0, 2.0), (0.5, 2.4), (1.0, 2.3)]).is_err());
        assert!(mk(&[(0.0, 2.0), (0.5, 2.0)]).is_err());
        assert!(mk(&[(0.0, 2.0), (0.1, 2.2), (1.0, 2.5)]).is_err());
        assert!(mk(&[(0.0, 2.0), (1.0, 3.1)]).is_err());
    }

    #[test]
    fn csv_tables() {
        let c = OmegaCurve::from_csv("a,omega\n0,2\n0.321,2\n0.5275,2.0575\n1,2.371\n".as_bytes())
            .unwrap();
        assert_eq!(c, OmegaCurve::refined());
        assert!(OmegaCurve::from_csv("x,y\n0,2\n1,2.3\n".as_bytes()).is_err());
        assert!(OmegaCurve::from_csv("a,omega\n0,2\n1,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn predicted_examples() {
        let p = predicted_flops(8, 8, MatMulBackend::Classical).unwrap();
        assert_eq!((p.inner.mul, p.outer.mul), (288, 0));
        let p = predicted_flops(8, 2, MatMulBackend::Classical).unwrap();
        assert_eq!((p.inner.mul, p.outer.mul), (96, 192));
        let p = predicted_flops(8, 4, MatMulBackend::Classical).unwrap();
        assert_eq!((p.inner.mul, p.outer.mul), (160, 128));
        assert_eq!(p.error, OpCounts::new(64, 0, 64, 0));
        assert!(predicted_flops(8, 3, MatMulBackend::Classical).is_err());
    }

    #[test]
    fn closed_form_matches_block_sum() {
        for d in [8usize, 16, 32, 64] {
            for b in (1..=d).filter(|b| d % b == 0) {
                let p = predicted_flops(d, b, MatMulBackend::Classical).unwrap();
                assert_eq!(p.outer, classical_outer_by_blocks(d, b), "d={d} b={b}");
                assert_eq!(p.inner.mul + p.outer.mul, (d * d * (d + 1) / 2) as u64);
            }
        }
    }
}
