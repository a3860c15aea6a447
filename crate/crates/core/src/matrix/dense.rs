use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};

/// Row-major `f64` matrix.
///
/// Every constructor rejects NaN and infinities, so a `DenseMatrix` built
/// through the public API holds only finite values.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    /// Builds a matrix from `f(row, col)`. Panics if `f` returns a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite value at ({r}, {c})");
                data.push(v);
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    /// Sets one entry. Panics on out-of-bounds indices or a non-finite value.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        assert!(value.is_finite(), "non-finite value");
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.view().column(col)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        self.view().transpose()
    }

    pub fn view(&self) -> MatRef<'_> {
        MatRef {
            data: &self.data,
            rows: self.rows,
            cols: self.cols,
            stride: self.cols,
        }
    }

    pub fn view_mut(&mut self) -> MatMut<'_> {
        MatMut {
            rows: self.rows,
            cols: self.cols,
            stride: self.cols,
            data: &mut self.data,
        }
    }

    /// Read-only view of `rows × cols` (half-open, 0-based). No copy is made.
    #[doc(alias = "slice_view")]
    pub fn slice(&self, rows: Range<usize>, cols: Range<usize>) -> Result<MatRef<'_>> {
        self.view().slice(rows, cols)
    }

    /// Writable view of `rows × cols`; writes land in `self`.
    pub fn slice_mut(&mut self, rows: Range<usize>, cols: Range<usize>) -> Result<MatMut<'_>> {
        self.view_mut().into_slice(rows, cols)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise absolute difference. Panics on a shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.view().asymmetry(rel_tol).is_none()
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

fn check_range(range: &Range<usize>, len: usize, what: &str) -> Result<()> {
    if range.start > range.end || range.end > len {
        return Err(Error::shape(format!(
            "{what} range {}..{} out of bounds for extent {len}",
            range.start, range.end
        )));
    }
    Ok(())
}

fn span(rows: usize, cols: usize, stride: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * stride + cols
    }
}

/// Borrowed read-only window into a row-major matrix.
#[derive(Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    stride: usize,
}

impl<'a> MatRef<'a> {
    /// Wraps a packed row-major slice.
    pub fn from_slice(data: &'a [f64], rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot back a {rows}x{cols} view",
                data.len()
            )));
        }
        Ok(MatRef {
            data,
            rows,
            cols,
            stride: cols,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.stride + col]
    }

    pub fn row(&self, row: usize) -> &'a [f64] {
        assert!(row < self.rows, "row out of bounds");
        if self.cols == 0 {
            return &[];
        }
        let start = row * self.stride;
        &self.data[start..start + self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        assert!(col < self.cols, "column out of bounds");
        (0..self.rows)
            .map(|r| self.data[r * self.stride + col])
            .collect()
    }

    pub fn slice(&self, rows: Range<usize>, cols: Range<usize>) -> Result<MatRef<'a>> {
        check_range(&rows, self.rows, "row")?;
        check_range(&cols, self.cols, "column")?;
        let (nr, nc) = (rows.len(), cols.len());
        let start = rows.start * self.stride + cols.start;
        let len = span(nr, nc, self.stride);
        let data = if len == 0 {
            &self.data[..0]
        } else {
            &self.data[start..start + len]
        };
        Ok(MatRef {
            data,
            rows: nr,
            cols: nc,
            stride: self.stride,
        })
    }

    pub fn to_owned(&self) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
        }
        DenseMatrix::from_raw(self.rows, self.cols, data)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                out.data[c * self.rows + r] = *v;
            }
        }
        out
    }

    /// First `(row, col)` pair violating `|a_rc - a_cr| <= rel_tol * max|a|`.
    pub(crate) fn asymmetry(&self, rel_tol: f64) -> Option<(usize, usize)> {
        if self.rows != self.cols {
            return Some((0, 0));
        }
        let scale = (0..self.rows)
            .flat_map(|r| self.row(r).iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = rel_tol * scale;
        for r in 0..self.rows {
            for c in r + 1..self.cols {
                if (self.get(r, c) - self.get(c, r)).abs() > tol {
                    return Some((r, c));
                }
            }
        }
        None
    }
}

/// Borrowed writable window into a row-major matrix.
pub struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    stride: usize,
}

impl<'a> MatMut<'a> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.stride + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        assert!(value.is_finite(), "non-finite value");
        self.data[row * self.stride + col] = value;
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        assert!(row < self.rows, "row out of bounds");
        if self.cols == 0 {
            return &mut [];
        }
        let start = row * self.stride;
        &mut self.data[start..start + self.cols]
    }

    pub fn as_ref(&self) -> MatRef<'_> {
        MatRef {
            data: &*self.data,
            rows: self.rows,
            cols: self.cols,
            stride: self.stride,
        }
    }

    pub fn slice_mut(&mut self, rows: Range<usize>, cols: Range<usize>) -> Result<MatMut<'_>> {
        MatMut {
            data: &mut *self.data,
            rows: self.rows,
            cols: self.cols,
            stride: self.stride,
        }
        .into_slice(rows, cols)
    }

    pub fn into_slice(self, rows: Range<usize>, cols: Range<usize>) -> Result<MatMut<'a>> {
        check_range(&rows, self.rows, "row")?;
        check_range(&cols, self.cols, "column")?;
        let (nr, nc) = (rows.len(), cols.len());
        let start = rows.start * self.stride + cols.start;
        let len = span(nr, nc, self.stride);
        let data = if len == 0 {
            &mut self.data[..0]
        } else {
            &mut self.data[start..start + len]
        };
        Ok(MatMut {
            data,
            rows: nr,
            cols: nc,
            stride: self.stride,
        })
    }

    /// `self -= other`, entrywise.
    pub fn sub_assign(&mut self, other: MatRef<'_>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        for r in 0..self.rows {
            let src = other.row(r);
            for (d, s) in self.row_mut(r).iter_mut().zip(src) {
                *d -= *s;
            }
        }
        Ok(())
    }

    pub fn copy_from(&mut self, other: MatRef<'_>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "cannot copy {}x{} into {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        for r in 0..self.rows {
            self.row_mut(r).copy_from_slice(other.row(r));
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        for r in 0..self.rows {
            self.row_mut(r).fill(value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |r, c| (r * n + c) as f64)
    }

    #[test]
    fn rejects_non_finite_and_bad_lengths() {
        assert!(matches!(
            DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            DenseMatrix::from_vec(2, 2, vec![1.0; 3]),
            Err(Error::Shape(_))
        ));
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn right_block_view() {
        let a = counting(4);
        let v = a.slice(0..4, 2..4).unwrap();
        assert_eq!(v.shape(), (4, 2));
        assert_eq!(v.row(1), &[6.0, 7.0]);
        assert_eq!(v.get(3, 0), 14.0);
        assert_eq!(v.column(1), vec![3.0, 7.0, 11.0, 15.0]);
    }

    #[test]
    fn empty_view_has_width_zero() {
        let a = counting(4);
        let v = a.slice(0..4, 4..4).unwrap();
        assert_eq!(v.shape(), (4, 0));
        assert!(v.is_empty());
        assert_eq!(v.to_owned().shape(), (4, 0));
    }

    #[test]
    fn out_of_bounds_view_is_a_shape_error() {
        let a = counting(4);
        assert!(matches!(a.slice(0..5, 0..1), Err(Error::Shape(_))));
        assert!(matches!(a.slice(0..4, 3..5), Err(Error::Shape(_))));
    }

    #[test]
    fn writes_through_view_reach_parent() {
        let mut a = counting(4);
        {
            let mut v = a.slice_mut(1..3, 1..3).unwrap();
            v.set(0, 0, -1.0);
            v.row_mut(1)[1] = -2.0;
        }
        assert_eq!(a.get(1, 1), -1.0);
        assert_eq!(a.get(2, 2), -2.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn nested_mutable_slices() {
        let mut a = DenseMatrix::zeros(4, 4);
        let mut v = a.slice_mut(1..4, 1..4).unwrap();
        v.slice_mut(1..2, 1..3).unwrap().fill(5.0);
        assert_eq!(a.row(2), &[0.0, 0.0, 5.0, 5.0]);
    }

    #[test]
    fn transpose_of_view() {
        let a = counting(3);
        let t = a.slice(0..2, 1..3).unwrap().transpose();
        assert_eq!(
            t,
            DenseMatrix::from_rows(&[[1.0, 4.0], [2.0, 5.0]]).unwrap()
        );
    }
}
