use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Mask, PruneConfig};
use crate::error::{Error, Result};
use crate::hessian::{exact_inverse_hessian, Lambda};
use crate::mask::keep_count;
use crate::matrix::RationalMatrix;

/// Largest dimension [`prune_exact`] accepts by default.
pub const ORACLE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPruneResult {
    pub weights: RationalMatrix,
    pub mask: Mask,
}

/// The lazy schedule of [`super::prune_lazy`] in exact rational arithmetic.
///
/// `cfg.lambda` must be [`Lambda::Fixed`]; its `f64` value is converted
/// exactly. Saliencies are compared exactly, with ties going to the smaller
/// row index. In exact arithmetic the lazy and eager schedules coincide, so
/// this is the ground truth for both.
pub fn prune_exact(
    cfg: &PruneConfig,
    w: &RationalMatrix,
    x: &RationalMatrix,
) -> Result<ExactPruneResult> {
    let d = w.rows();
    if d == 0 || w.cols() != d || x.rows() != d || x.cols() == 0 {
        return Err(Error::shape(
            "exact oracle needs square weights and matching calibration rows",
        ));
    }
    if d > ORACLE_LIMIT {
        return Err(Error::config(format!(
            "oracle limited to d ≤ {ORACLE_LIMIT}, got {d}"
        )));
    }
    cfg.validate(d)?;
    let lambda = match cfg.lambda {
        Lambda::Fixed(v) => BigRational::from_float(v).expect("validated lambda is finite"),
        Lambda::Auto => return Err(Error::config("exact oracle needs an explicit lambda")),
    };

    let h = exact_inverse_hessian(x, &lambda)?;
    let mut w = w.clone();
    let mut mask = Mask::all_kept(d, d);
    let keep = keep_count(d, cfg.sparsity);
    let zero = BigRational::zero();

    for start in (0..d).step_by(cfg.block) {
        let end = (start + cfg.block).min(d);
        let mut err = RationalMatrix::zeros(d, end - start);

        for j in start..end {
            if j % cfg.mask_block == 0 {
                for c in j..(j + cfg.mask_block).min(d) {
                    if h.get(c, c).is_zero() {
                        return Err(Error::DegenerateDiagonal {
                            column: c,
                            value: 0.0,
                        });
                    }
                    // H̃[c, c]² is shared by the whole column, so |w| ranks
                    // rows exactly as w² / H̃[c, c]² does.
                    let scores: Vec<BigRational> = (0..d).map(|r| w.get(r, c).abs()).collect();
                    let mut order: Vec<usize> = (0..d).collect();
                    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then(a.cmp(&b)));
                    let mut keep_col = vec![false; d];
                    for &r in &order[..keep] {
                        keep_col[r] = true;
                    }
                    for (r, &k) in keep_col.iter().enumerate() {
                        mask.keep[r * d + c] = k;
                    }
                }
            }

            let hjj = h.get(j, j).clone();
            for r in 0..d {
                if !mask.is_kept(r, j) {
                    err.set(r, j - start, w.get(r, j) / &hjj);
                }
            }
            for r in 0..d {
                let e = err.get(r, j - start).clone();
                if e == zero {
                    continue;
                }
                for c in j..end {
                    let delta = &e * h.get(j, c);
                    *w.get_mut(r, c) -= delta;
                }
            }
        }

        for r in 0..d {
            for c in end..d {
                let mut acc = BigRational::zero();
                for k in start..end {
                    let e = err.get(r, k - start);
                    if !e.is_zero() {
                        acc += e * h.get(k, c);
                    }
                }
                *w.get_mut(r, c) -= acc;
            }
        }
    }

    for r in 0..d {
        for c in 0..d {
            if !mask.is_kept(r, c) {
                w.set(r, c, zero.clone());
            }
        }
    }
    Ok(ExactPruneResult { weights: w, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn cfg(p: f64, b: usize, bs: usize) -> PruneConfig {
        PruneConfig::new(p, b, bs).with_lambda(Lambda::Fixed(1.0))
    }

    #[test]
    fn trivial_sparsities() {
        let w = RationalMatrix::from_integers(&[[1, -2, 3], [4, 0, -1], [2, 2, 2]]).unwrap();
        let x = RationalMatrix::from_integers(&[[1, 0, 1], [0, 2, 1], [1, 1, 0]]).unwrap();
        assert_eq!(prune_exact(&cfg(0.0, 3, 1), &w, &x).unwrap().weights, w);
        assert_eq!(
            prune_exact(&cfg(1.0, 3, 1), &w, &x).unwrap().weights,
            RationalMatrix::zeros(3, 3)
        );
    }

    /// d = 4, B = 2, B_s = 2, p = 0.5, X = I, λ = 1 → H̃ = ½I.
    ///
    /// With a diagonal H̃ every compensation term `E · H̃[j, c]` for `c ≠ j`
    /// vanishes, so pruning reduces to keeping the two largest |w| per column.
    #[test]
    fn identity_calibration_fixture() {
        let w = RationalMatrix::from_integers(&[
            [3, -1, 2, 0],
            [-4, 2, -1, 1],
            [1, 3, 4, -2],
            [2, -4, -3, 3],
        ])
        .unwrap();
        let x = RationalMatrix::identity(4);
        let out = prune_exact(&cfg(0.5, 2, 2), &w, &x).unwrap();
        let want = RationalMatrix::from_integers(&[
            [3, 0, 0, 0],
            [-4, 0, 0, 0],
            [0, 3, 4, -2],
            [0, -4, -3, 3],
        ])
        .unwrap();
        assert_eq!(out.weights, want);
        assert_eq!(out.mask.column_sum(0), 2);
    }

    /// Non-diagonal Hessian: column 1 must pick up the compensation from
    /// pruning column 0. Hand computation for d = 2, X = [[1, 1], [0, 1]], λ = 1:
    /// X Xᵀ + I = [[3, 1], [1, 2]], H̃ = [[2/5, -1/5], [-1/5, 3/5]].
    /// W = [[1, 5], [3, 7]], p = 0.5: column 0 keeps row 1 (|3| > |1|), so
    /// e₀ = 1 / (2/5) = 5/2 and W[0, 1] ← 5 - (5/2)(-1/5) = 11/2.
    /// Column 1 then keeps row 1 (7 > 11/2) and zeroes row 0.
    #[test]
    fn hand_computed_compensation() {
        let w = RationalMatrix::from_integers(&[[1, 5], [3, 7]]).unwrap();
        let x = RationalMatrix::from_integers(&[[1, 1], [0, 1]]).unwrap();
        let h = exact_inverse_hessian(&x, &q(1, 1)).unwrap();
        assert_eq!(
            h,
            RationalMatrix::from_vec(2, 2, vec![q(2, 5), q(-1, 5), q(-1, 5), q(3, 5)]).unwrap()
        );

        let eager_like = prune_exact(&cfg(0.5, 1, 1), &w, &x).unwrap();
        let lazy = prune_exact(&cfg(0.5, 2, 1), &w, &x).unwrap();
        assert_eq!(eager_like, lazy);
        assert_eq!(
            lazy.weights,
            RationalMatrix::from_integers(&[[0, 0], [3, 7]]).unwrap()
        );

        // p = 0.5 with B_s = 2 selects both masks up front from the raw
        // weights: column 1 keeps row 1 as well, same outcome.
        let up_front = prune_exact(&cfg(0.5, 2, 2), &w, &x).unwrap();
        assert_eq!(up_front.weights, lazy.weights);
    }

    #[test]
    fn float_pruner_agrees_on_hand_instance() {
        let w = DenseMatrix::from_rows(&[[1.0, 5.0], [3.0, 7.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let c = cfg(0.5, 1, 1);
        let f = super::super::prune_lazy(&c, &w, &x).unwrap();
        let e = prune_exact(
            &c,
            &RationalMatrix::from_dense(&w),
            &RationalMatrix::from_dense(&x),
        )
        .unwrap();
        assert_eq!(f.mask, e.mask);
        assert!(f.weights.max_abs_diff(&e.weights.to_dense()) < 1e-12);
    }

    #[test]
    fn guards() {
        let big = RationalMatrix::identity(17);
        assert!(matches!(
            prune_exact(&cfg(0.5, 1, 1), &big, &big),
            Err(Error::Config(_))
        ));
        let w = RationalMatrix::identity(2);
        let auto = PruneConfig::new(0.5, 1, 1);
        assert!(matches!(prune_exact(&auto, &w, &w), Err(Error::Config(_))));
    }
}
