//! Regularized inverse Hessian `H̃ = (X Xᵀ + λI)⁻¹` of the layer-wise
//! reconstruction problem.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    matmul_in, spd_inverse, DenseMatrix, ExecMode, MatMulBackend, OpCounts, RationalMatrix,
};

/// Fraction of the mean Gram diagonal used when `λ` is [`Lambda::Auto`].
pub const AUTO_LAMBDA_FRACTION: f64 = 0.01;

/// Diagonal regularizer.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda {
    Fixed(f64),
    /// `0.01 · mean(diag(X Xᵀ))`.
    #[default]
    Auto,
}

impl Lambda {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Lambda::Fixed(v) if !(v > 0.0 && v.is_finite()) => Err(Error::Config(format!(
                "lambda must be positive and finite, got {v}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Fixed(v) => write!(f, "{v}"),
            Lambda::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for Lambda {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Lambda::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("`{s}` is neither a number nor `auto`"))?;
        let l = Lambda::Fixed(v);
        l.validate().map_err(|e| e.to_string())?;
        Ok(l)
    }
}

/// `(X Xᵀ + λI)⁻¹` together with the `λ` actually used.
#[derive(Debug, Clone)]
pub struct InverseHessian {
    matrix: DenseMatrix,
    lambda: f64,
    diag_min: f64,
}

impl InverseHessian {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Smallest diagonal entry; strictly positive.
    pub fn diag_min(&self) -> f64 {
        self.diag_min
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.matrix.get(j, j)
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }
}

/// Builds `H̃` from calibration inputs `x` (`d × N`) with a classical Gram product.
pub fn build_inverse_hessian(
    x: &DenseMatrix,
    lambda: Lambda,
    counts: &mut OpCounts,
) -> Result<InverseHessian> {
    build_inverse_hessian_with(
        x,
        lambda,
        MatMulBackend::Classical,
        ExecMode::Deterministic,
        counts,
    )
}

pub fn build_inverse_hessian_with(
    x: &DenseMatrix,
    lambda: Lambda,
    gram_backend: MatMulBackend,
    mode: ExecMode,
    counts: &mut OpCounts,
) -> Result<InverseHessian> {
    let (d, n) = x.shape();
    if n == 0 {
        return Err(Error::shape("calibration matrix needs at least one column"));
    }
    lambda.validate()?;

    let mut gram = {
        let xt = x.transpose();
        matmul_in(mode, x.view(), xt.view(), gram_backend, counts)?
    };

    let lambda = match lambda {
        Lambda::Fixed(v) => v,
        Lambda::Auto => {
            let trace: f64 = gram.diagonal().iter().sum();
            counts.add += d.saturating_sub(1) as u64;
            if !(trace > 0.0) {
                return Err(Error::DegenerateCalibration);
            }
            counts.div += 1;
            counts.mul += 1;
            AUTO_LAMBDA_FRACTION * (trace / d as f64)
        }
    };

    for i in 0..d {
        let v = gram.get(i, i) + lambda;
        gram.set(i, i, v);
    }
    counts.add += d as u64;

    let matrix = spd_inverse(gram.view(), counts)?;
    let diag_min = matrix.diagonal().into_iter().fold(f64::INFINITY, f64::min);
    if !(diag_min > 0.0) {
        let column = matrix
            .diagonal()
            .iter()
            .position(|&v| v == diag_min)
            .unwrap_or(0);
        return Err(Error::DegenerateDiagonal {
            column,
            value: diag_min,
        });
    }
    Ok(InverseHessian {
        matrix,
        lambda,
        diag_min,
    })
}

/// Exact `(X Xᵀ + λI)⁻¹` over the rationals.
pub fn exact_inverse_hessian(x: &RationalMatrix, lambda: &BigRational) -> Result<RationalMatrix> {
    let mut gram = x.mul(&x.transpose())?;
    for i in 0..gram.rows() {
        *gram.get_mut(i, i) += lambda;
    }
    gram.inverse()
}
