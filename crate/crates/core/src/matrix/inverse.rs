use super::dense::{DenseMatrix, MatRef};
use super::ledger::OpCounts;
use crate::error::{Error, Result};

/// Relative tolerance for the symmetry precondition of [`spd_inverse`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Pivots below this are treated as a failed factorization.
pub const MIN_PIVOT: f64 = 1e-300;

/// Inverse of a symmetric positive definite matrix.
///
/// Factors `A = L D Lᵀ` with unit lower-triangular `L`, inverts the factor
/// and forms `A⁻¹ = L⁻ᵀ D⁻¹ L⁻¹`. No square roots are taken, so diagonal
/// inputs with power-of-two entries invert exactly. Only the upper triangle
/// of the product is computed and mirrored, so the result is exactly
/// symmetric.
pub fn spd_inverse(a: MatRef<'_>, counts: &mut OpCounts) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape(format!(
            "spd_inverse needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if let Some((row, col)) = a.asymmetry(SYMMETRY_TOLERANCE) {
        return Err(Error::NotSymmetric { row, col });
    }

    // Unit lower factor L (row-major, strict lower part) and pivots D.
    // Row i keeps t_k = L[i][k]·D[k] while it is being built.
    let mut l = vec![0.0; n * n];
    let mut dg = vec![0.0; n];
    let mut t = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let lj = &l[j * n..j * n + j];
            let dot: f64 = t[..j].iter().zip(lj).fold(0.0, |s, (x, y)| s + x * y);
            t[j] = a.get(i, j) - dot;
            l[i * n + j] = t[j] / dg[j];
            counts.mul += j as u64;
            counts.add += j as u64;
            counts.div += 1;
        }
        let li = &l[i * n..i * n + i];
        let dot: f64 = t[..i].iter().zip(li).fold(0.0, |s, (x, y)| s + x * y);
        counts.mul += i as u64;
        counts.add += i as u64;
        let p = a.get(i, i) - dot;
        if !(p > 0.0) || p < MIN_PIVOT {
            return Err(Error::Singular { pivot: i });
        }
        dg[i] = p;
    }

    // u = L⁻ᵀ (unit upper triangular). u[j][i] = (L⁻¹)[i][j], so both the
    // triangular solve and the final product read contiguous rows.
    let mut u = vec![0.0; n * n];
    for j in 0..n {
        u[j * n + j] = 1.0;
        for i in j + 1..n {
            let (li, uj) = (&l[i * n + j..i * n + i], &u[j * n + j..j * n + i]);
            let dot: f64 = li.iter().zip(uj).fold(0.0, |s, (x, y)| s + x * y);
            counts.mul += (i - j) as u64;
            counts.add += (i - j - 1) as u64;
            u[j * n + i] = -dot;
        }
    }
    drop(l);

    // s[j][k] = u[j][k] / D[k]
    let inv_d: Vec<f64> = dg.iter().map(|p| 1.0 / p).collect();
    counts.div += n as u64;
    let mut sc = vec![0.0; n * n];
    for j in 0..n {
        for k in j..n {
            sc[j * n + k] = u[j * n + k] * inv_d[k];
        }
        counts.mul += (n - j) as u64;
    }

    // (A⁻¹)_ij = Σ_{k ≥ max(i,j)} u[i][k] s[j][k]
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let (ui, sj) = (&u[i * n + j..i * n + n], &sc[j * n + j..j * n + n]);
            let v: f64 = ui.iter().zip(sj).fold(0.0, |s, (x, y)| s + x * y);
            counts.mul += (n - j) as u64;
            counts.add += (n - j - 1) as u64;
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    DenseMatrix::from_vec(n, n, out)
}
