use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::{DenseMatrix, MatRef};
use super::ledger::OpCounts;
use crate::error::{Error, Result};

/// Default recursion cutoff for [`MatMulBackend::Strassen`].
pub const DEFAULT_STRASSEN_THRESHOLD: usize = 64;

/// Matrix multiplication algorithm.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatMulBackend {
    /// Triple loop, one fixed-order dot product per output entry.
    #[default]
    Classical,
    /// Strassen's seven-product recursion. A product recurses while every
    /// dimension exceeds `threshold`, otherwise it is computed classically.
    Strassen { threshold: usize },
}

impl MatMulBackend {
    pub fn strassen() -> Self {
        MatMulBackend::Strassen {
            threshold: DEFAULT_STRASSEN_THRESHOLD,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MatMulBackend::Classical => "classical",
            MatMulBackend::Strassen { .. } => "strassen",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MatMulBackend::Strassen { threshold: 0 } => {
                Err(Error::config("strassen threshold must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MatMulBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatMulBackend::Classical => f.write_str("classical"),
            MatMulBackend::Strassen { threshold } => write!(f, "strassen:{threshold}"),
        }
    }
}

impl FromStr for MatMulBackend {
    type Err = String;

    /// Accepts `classical`, `strassen` and `strassen:<threshold>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "classical" => Ok(MatMulBackend::Classical),
            None if s == "strassen" => Ok(MatMulBackend::strassen()),
            Some(("strassen", t)) => match t.parse::<usize>() {
                Ok(threshold) if threshold >= 1 => Ok(MatMulBackend::Strassen { threshold }),
                _ => Err(format!("invalid strassen threshold `{t}`")),
            },
            _ => Err(format!(
                "unknown backend `{s}` (expected classical, strassen or strassen:<threshold>)"
            )),
        }
    }
}

/// Whether kernels may use worker threads.
///
/// Results are identical in both modes: parallel kernels split work by output
/// rows or columns and never change the order of any floating-point sum.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    #[default]
    Deterministic,
    Performance,
}

/// `a · b` with `backend`, tallying scalar operations into `counts`.
pub fn matmul(
    a: MatRef<'_>,
    b: MatRef<'_>,
    backend: MatMulBackend,
    counts: &mut OpCounts,
) -> Result<DenseMatrix> {
    matmul_in(ExecMode::Deterministic, a, b, backend, counts)
}

pub fn matmul_in(
    mode: ExecMode,
    a: MatRef<'_>,
    b: MatRef<'_>,
    backend: MatMulBackend,
    counts: &mut OpCounts,
) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    backend.validate()?;
    Ok(match backend {
        MatMulBackend::Classical => classical(mode, a, b, counts),
        MatMulBackend::Strassen { threshold } => strassen(mode, a, b, threshold, counts),
    })
}

/// Operation counts of the classical product of an `m×k` and a `k×n` matrix.
pub fn classical_counts(m: usize, k: usize, n: usize) -> OpCounts {
    let (m, k, n) = (m as u64, k as u64, n as u64);
    OpCounts::new(m * k * n, m * k.saturating_sub(1) * n, 0, 0)
}

/// Operation counts `strassen` accumulates for an `m×k` by `k×n` product,
/// derived from the same recursion without touching any data.
pub fn strassen_counts(m: usize, k: usize, n: usize, threshold: usize) -> OpCounts {
    assert!(threshold >= 1, "strassen threshold must be at least 1");
    if m <= threshold || k <= threshold || n <= threshold {
        return classical_counts(m, k, n);
    }
    let (hm, hk, hn) = (m.div_ceil(2), k.div_ceil(2), n.div_ceil(2));
    let adds = 5 * hm * hk + 5 * hk * hn + 8 * hm * hn;
    let mut counts = strassen_counts(hm, hk, hn, threshold);
    counts = OpCounts::new(
        7 * counts.mul,
        7 * counts.add,
        7 * counts.div,
        7 * counts.cmp,
    );
    counts.add += adds as u64;
    counts
}

fn classical_row(a_row: &[f64], b: MatRef<'_>, out: &mut [f64]) {
    // i-k-j order: each out[j] is accumulated over k in increasing order,
    // exactly the serial dot product.
    for (k, &aik) in a_row.iter().enumerate() {
        for (o, &bkj) in out.iter_mut().zip(b.row(k)) {
            *o += aik * bkj;
        }
    }
}

fn classical(mode: ExecMode, a: MatRef<'_>, b: MatRef<'_>, counts: &mut OpCounts) -> DenseMatrix {
    let (m, n) = (a.rows(), b.cols());
    let mut out = vec![0.0; m * n];
    if n > 0 {
        match mode {
            ExecMode::Deterministic => {
                for (i, row) in out.chunks_exact_mut(n).enumerate() {
                    classical_row(a.row(i), b, row);
                }
            }
            ExecMode::Performance => {
                out.par_chunks_exact_mut(n)
                    .enumerate()
                    .for_each(|(i, row)| classical_row(a.row(i), b, row));
            }
        }
    }
    *counts += classical_counts(m, a.cols(), n);
    DenseMatrix::from_raw(m, n, out)
}

fn padded(a: MatRef<'_>, rows: usize, cols: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, cols);
    out.view_mut()
        .into_slice(0..a.rows(), 0..a.cols())
        .and_then(|mut v| v.copy_from(a))
        .expect("padding never shrinks");
    out
}

fn combine(x: MatRef<'_>, y: MatRef<'_>, sign: f64, counts: &mut OpCounts) -> DenseMatrix {
    let (r, c) = x.shape();
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        data.extend(x.row(i).iter().zip(y.row(i)).map(|(p, q)| p + sign * q));
    }
    counts.add += (r * c) as u64;
    DenseMatrix::from_raw(r, c, data)
}

fn add(x: MatRef<'_>, y: MatRef<'_>, counts: &mut OpCounts) -> DenseMatrix {
    combine(x, y, 1.0, counts)
}

fn sub(x: MatRef<'_>, y: MatRef<'_>, counts: &mut OpCounts) -> DenseMatrix {
    combine(x, y, -1.0, counts)
}

fn quadrants(m: &DenseMatrix) -> [MatRef<'_>; 4] {
    let (hr, hc) = (m.rows() / 2, m.cols() / 2);
    let (r, c) = m.shape();
    let q = |rows, cols| m.slice(rows, cols).expect("quadrant in bounds");
    [
        q(0..hr, 0..hc),
        q(0..hr, hc..c),
        q(hr..r, 0..hc),
        q(hr..r, hc..c),
    ]
}

fn strassen(
    mode: ExecMode,
    a: MatRef<'_>,
    b: MatRef<'_>,
    threshold: usize,
    counts: &mut OpCounts,
) -> DenseMatrix {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    if m <= threshold || k <= threshold || n <= threshold {
        return classical(mode, a, b, counts);
    }
    let (hm, hk, hn) = (m.div_ceil(2), k.div_ceil(2), n.div_ceil(2));
    let ap = padded(a, 2 * hm, 2 * hk);
    let bp = padded(b, 2 * hk, 2 * hn);
    let [a11, a12, a21, a22] = quadrants(&ap);
    let [b11, b12, b21, b22] = quadrants(&bp);

    let rec = |x: &DenseMatrix, y: &DenseMatrix, counts: &mut OpCounts| {
        strassen(mode, x.view(), y.view(), threshold, counts)
    };

    let m1 = rec(&add(a11, a22, counts), &add(b11, b22, counts), counts);
    let m2 = rec(&add(a21, a22, counts), &b11.to_owned(), counts);
    let m3 = rec(&a11.to_owned(), &sub(b12, b22, counts), counts);
    let m4 = rec(&a22.to_owned(), &sub(b21, b11, counts), counts);
    let m5 = rec(&add(a11, a12, counts), &b22.to_owned(), counts);
    let m6 = rec(&sub(a21, a11, counts), &add(b11, b12, counts), counts);
    let m7 = rec(&sub(a12, a22, counts), &add(b21, b22, counts), counts);

    // C11 = M1 + M4 - M5 + M7, C12 = M3 + M5, C21 = M2 + M4, C22 = M1 - M2 + M3 + M6
    let c11 = add(
        sub(add(m1.view(), m4.view(), counts).view(), m5.view(), counts).view(),
        m7.view(),
        counts,
    );
    let c12 = add(m3.view(), m5.view(), counts);
    let c21 = add(m2.view(), m4.view(), counts);
    let c22 = add(
        add(sub(m1.view(), m2.view(), counts).view(), m3.view(), counts).view(),
        m6.view(),
        counts,
    );

    let mut out = DenseMatrix::zeros(m, n);
    let mut dst = out.view_mut();
    for r in 0..m {
        let (left, right, rr) = if r < hm {
            (&c11, &c12, r)
        } else {
            (&c21, &c22, r - hm)
        };
        let row = dst.row_mut(r);
        row[..hn].copy_from_slice(left.row(rr));
        row[hn..].copy_from_slice(&right.row(rr)[..n - hn]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    /// Plain triple loop used as the reference product.
    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    fn pseudo(rows: usize, cols: usize, salt: u64) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |r, c| {
            let h = (r as u64 * 7919 + c as u64 * 104_729 + salt * 31).wrapping_mul(2_654_435_761);
            ((h >> 7) % 2001) as f64 / 1000.0 - 1.0
        })
    }

    #[test]
    fn identity_product_counts_27_muls() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let mut counts = OpCounts::ZERO;
        let p = matmul(
            DenseMatrix::identity(3).view(),
            a.view(),
            MatMulBackend::Classical,
            &mut counts,
        )
        .unwrap();
        assert_eq!(p, a);
        assert_eq!(counts.mul, 27);
        assert_eq!(counts.add, 18);
    }

    #[test]
    fn two_by_two_product() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let want = m(&[&[19.0, 22.0], &[43.0, 50.0]]);
        assert_eq!(naive(&a, &b), want);
        let mut counts = OpCounts::ZERO;
        assert_eq!(
            matmul(a.view(), b.view(), MatMulBackend::Classical, &mut counts).unwrap(),
            want
        );

        let mut counts = OpCounts::ZERO;
        let s = matmul(
            a.view(),
            b.view(),
            MatMulBackend::Strassen { threshold: 1 },
            &mut counts,
        )
        .unwrap();
        assert_eq!(s, want);
        assert_eq!(counts.mul, 7);
        assert_eq!(counts.add, 18);
    }

    #[test]
    fn dimension_mismatch() {
        let mut counts = OpCounts::ZERO;
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            matmul(a.view(), a.view(), MatMulBackend::Classical, &mut counts),
            Err(Error::Shape(_))
        ));
        assert!(counts.is_zero());
    }

    #[test]
    fn zero_threshold_rejected() {
        let a = DenseMatrix::identity(2);
        let mut counts = OpCounts::ZERO;
        assert!(matches!(
            matmul(
                a.view(),
                a.view(),
                MatMulBackend::Strassen { threshold: 0 },
                &mut counts
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn strassen_handles_odd_and_rectangular_shapes() {
        for &(mm, kk, nn, t) in &[
            (5, 7, 3, 1),
            (9, 4, 11, 2),
            (33, 17, 20, 4),
            (1, 6, 6, 1),
            (6, 0, 4, 1),
        ] {
            let a = pseudo(mm, kk, 1);
            let b = pseudo(kk, nn, 2);
            let mut counts = OpCounts::ZERO;
            let s = matmul(
                a.view(),
                b.view(),
                MatMulBackend::Strassen { threshold: t },
                &mut counts,
            )
            .unwrap();
            assert!(s.max_abs_diff(&naive(&a, &b)) < 1e-12, "{mm}x{kk}x{nn}");
            assert_eq!(counts, strassen_counts(mm, kk, nn, t), "{mm}x{kk}x{nn}");
        }
    }

    #[test]
    fn strassen_mul_count_is_seven_to_the_k() {
        for k in 0..=5u32 {
            let n = 1usize << k;
            let a = pseudo(n, n, 3);
            let mut counts = OpCounts::ZERO;
            matmul(
                a.view(),
                a.view(),
                MatMulBackend::Strassen { threshold: 1 },
                &mut counts,
            )
            .unwrap();
            assert_eq!(counts.mul, 7u64.pow(k));
        }
    }

    #[test]
    fn performance_mode_is_bitwise_identical() {
        let a = pseudo(37, 29, 4);
        let b = pseudo(29, 41, 5);
        for backend in [
            MatMulBackend::Classical,
            MatMulBackend::Strassen { threshold: 8 },
        ] {
            let (mut c1, mut c2) = (OpCounts::ZERO, OpCounts::ZERO);
            let s = matmul_in(
                ExecMode::Deterministic,
                a.view(),
                b.view(),
                backend,
                &mut c1,
            )
            .unwrap();
            let p = matmul_in(ExecMode::Performance, a.view(), b.view(), backend, &mut c2).unwrap();
            assert_eq!(s.as_slice(), p.as_slice());
            assert_eq!(c1, c2);
        }
    }

    #[test]
    fn backend_parsing() {
        assert_eq!(
            "classical".parse::<MatMulBackend>().unwrap(),
            MatMulBackend::Classical
        );
        assert_eq!(
            "strassen".parse::<MatMulBackend>().unwrap(),
            MatMulBackend::strassen()
        );
        assert_eq!(
            "strassen:16".parse::<MatMulBackend>().unwrap(),
            MatMulBackend::Strassen { threshold: 16 }
        );
        assert!("strassen:0".parse::<MatMulBackend>().is_err());
        assert!("winograd".parse::<MatMulBackend>().is_err());
    }
}
