use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Exact matrix over arbitrary-precision rationals, row-major.
///
/// `BigRational` normalizes after every operation, so entries are always in
/// lowest terms. Used as the ground-truth oracle for the float kernels.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigRational::from_integer(1.into());
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<BigRational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(RationalMatrix { rows, cols, data })
    }

    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape("ragged integer rows"));
            }
            data.extend(
                r.iter()
                    .map(|&v| BigRational::from_integer(BigInt::from(v))),
            );
        }
        Self::from_vec(rows.len(), cols, data)
    }

    /// Exact conversion; every finite `f64` is a dyadic rational.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let data = m
            .as_slice()
            .iter()
            .map(|&v| BigRational::from_float(v).expect("DenseMatrix entries are finite"))
            .collect();
        RationalMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data,
        }
    }

    /// Nearest-`f64` conversion of every entry.
    pub fn to_dense(&self) -> DenseMatrix {
        let data = self
            .data
            .iter()
            .map(|v| v.to_f64().expect("rational converts to f64"))
            .collect();
        DenseMatrix::from_vec(self.rows, self.cols, data).expect("rational entries are finite")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &BigRational {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &self.data[row * self.cols + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut BigRational {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &mut self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: BigRational) {
        *self.get_mut(row, col) = value;
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = &self.data[i * self.cols + k];
                if aik.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = aik * &other.data[k * other.cols + j];
                    out.data[i * other.cols + j] += t;
                }
            }
        }
        Ok(out)
    }

    /// Exact inverse by fraction-free (Bareiss) Gauss-Jordan elimination.
    ///
    /// The matrix is scaled by the lcm `D` of its denominators to an integer
    /// matrix `M`; elimination on `[M | I]` keeps every entry integral and
    /// ends with `[p·I | adj]`, so `A⁻¹ = D · adj / p`.
    #[doc(alias = "rational_inverse")]
    pub fn inverse(&self) -> Result<RationalMatrix> {
        let n = self.rows;
        if self.cols != n {
            return Err(Error::shape(format!(
                "inverse needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let scale = self
            .data
            .iter()
            .fold(BigInt::one(), |l, v| l.lcm(v.denom()));
        let w = 2 * n;
        let mut m: Vec<BigInt> = Vec::with_capacity(n * w);
        for r in 0..n {
            for c in 0..n {
                let v = &self.data[r * n + c];
                m.push(v.numer() * (&scale / v.denom()));
            }
            for c in 0..n {
                m.push(if r == c {
                    BigInt::one()
                } else {
                    BigInt::zero()
                });
            }
        }

        let mut prev = BigInt::one();
        for k in 0..n {
            let pivot_row = (k..n)
                .find(|&r| !m[r * w + k].is_zero())
                .ok_or(Error::Singular { pivot: k })?;
            if pivot_row != k {
                for c in 0..w {
                    m.swap(pivot_row * w + c, k * w + c);
                }
            }
            let (head, tail) = m.split_at_mut(k * w);
            let (pivot, tail) = tail.split_at_mut(w);
            let p = pivot[k].clone();
            for row in head.chunks_mut(w).chain(tail.chunks_mut(w)) {
                let f = row[k].clone();
                for (x, pk) in row.iter_mut().zip(pivot.iter()) {
                    let num = &p * &*x - &f * pk;
                    *x = num / &prev;
                }
            }
            prev = p;
        }

        let data = (0..n)
            .flat_map(|r| (n..w).map(move |c| (r, c)))
            .map(|(r, c)| BigRational::new(&scale * &m[r * w + c], prev.clone()))
            .collect();
        Ok(RationalMatrix {
            rows: n,
            cols: n,
            data,
        })
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn identity_inverse() {
        let i = RationalMatrix::identity(2);
        assert_eq!(i.inverse().unwrap(), i);
    }

    #[test]
    fn two_by_two_inverse() {
        let a = RationalMatrix::from_integers(&[[2, 1], [1, 2]]).unwrap();
        let inv = a.inverse().unwrap();
        let want =
            RationalMatrix::from_vec(2, 2, vec![q(2, 3), q(-1, 3), q(-1, 3), q(2, 3)]).unwrap();
        assert_eq!(inv, want);
        assert_eq!(a.mul(&inv).unwrap(), RationalMatrix::identity(2));
    }

    #[test]
    fn singular_rejected() {
        let a = RationalMatrix::from_integers(&[[1, 1], [1, 1]]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::Singular { pivot: 1 })));
    }

    #[test]
    fn needs_row_swap() {
        let a = RationalMatrix::from_integers(&[[0, 1], [1, 0]]).unwrap();
        assert_eq!(a.inverse().unwrap(), a);
    }

    #[test]
    fn entries_stay_in_lowest_terms() {
        let a = RationalMatrix::from_vec(1, 1, vec![q(6, 4)]).unwrap();
        assert_eq!(a.get(0, 0), &q(3, 2));
        assert_eq!(*a.get(0, 0).denom(), BigInt::from(2));
    }

    #[test]
    fn dense_round_trip_is_exact() {
        let d = DenseMatrix::from_rows(&[[0.1, -2.5], [1e-300, 3.0]]).unwrap();
        assert_eq!(RationalMatrix::from_dense(&d).to_dense(), d);
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = RationalMatrix> {
        proptest::collection::vec((-9i64..=9, 1i64..=4), n * n).prop_map(move |v| {
            RationalMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| q(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(a in small_matrix(3), b in small_matrix(3), c in small_matrix(3)) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn inverse_is_exact(a in small_matrix(4)) {
            if let Ok(inv) = a.inverse() {
                prop_assert_eq!(a.mul(&inv).unwrap(), RationalMatrix::identity(4));
            }
        }
    }
}
