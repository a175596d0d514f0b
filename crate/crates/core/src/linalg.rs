//! Small dense helpers. Matrices are row-major `n*n` slices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// In-place lower Cholesky factor of a symmetric matrix. The strict upper
/// triangle is zeroed. Returns `None` when a pivot is not positive.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
        for k in (j + 1)..n {
            a[j * n + k] = 0.0;
        }
    }
    Some(())
}

/// Solves `L y = b` in place for lower-triangular `L`.
pub fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Squared ratio of the largest to smallest Cholesky diagonal entry. This is
/// a lower bound on the 2-norm condition number, exact for diagonal input.
pub fn cholesky_condition_estimate(l: &[f64], n: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = l[i * n + i];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (hi / lo).powi(2)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divisor `n`).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Ordinary least squares of `y` on the columns of `x` (row-major, `k`
/// columns). Fails when the design is rank-deficient.
pub fn ols(x: &[f64], k: usize, y: &[f64]) -> Option<OlsFit> {
    let n = y.len();
    let design = DMatrix::from_row_slice(n, k, x);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-10 {
        return None;
    }
    let yv = DVector::from_column_slice(y);
    let beta = svd.solve(&yv, 0.0).ok()?;
    let resid = &yv - &design * &beta;
    Some(OlsFit {
        coef: beta.iter().copied().collect(),
        residuals: resid.iter().copied().collect(),
    })
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, a);
    m.symmetric_eigenvalues().min()
}

/// Checks symmetry, unit diagonal and positive definiteness of a correlation
/// matrix.
pub fn validate_correlation(s: &[f64], n: usize) -> Result<()> {
    if s.len() != n * n {
        return Err(Error::InvalidParams(format!(
            "correlation target has {} entries, expected {}",
            s.len(),
            n * n
        )));
    }
    for i in 0..n {
        if (s[i * n + i] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "correlation target diagonal entry {} is {}",
                i + 1,
                s[i * n + i]
            )));
        }
        for j in 0..i {
            if (s[i * n + j] - s[j * n + i]).abs() > 1e-12 {
                return Err(Error::InvalidParams("correlation target is not symmetric".into()));
            }
        }
    }
    let mut l = s.to_vec();
    if cholesky_in_place(&mut l, n).is_none() {
        return Err(Error::NotPositiveDefinite("correlation target S".into()));
    }
    Ok(())
}
