//! Robust (sandwich) and inverse-Hessian standard errors.
//!
//! Both covariances are formed in the unconstrained coordinates and mapped to
//! natural parameters with the transform Jacobian (delta method).

use nalgebra::{DMatrix, DVector};

use super::optimizer::{gradient, inf_norm, map_indices, PENALTY};
use super::{transform, FitConfig, Objective};
use crate::data::SpreadPanel;
use crate::error::{Error, Result};
use crate::likelihood::SystemParams;

/// Relative step of the second differences.
const HESSIAN_STEP: f64 = 2e-4;

/// Curvature below this fraction of the largest counts as flat.
pub const FLAT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Sandwich `A^-1 B A^-1 / n` standard errors.
    pub robust: Vec<f64>,
    /// `(-A)^-1 / n` standard errors.
    pub hessian: Vec<f64>,
    /// Flat Hessian directions excluded from both covariances.
    pub flat_directions: usize,
}

impl StandardErrors {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn robust_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|k| self.robust[k])
    }

    /// Significance marker of entry `k` from the robust z-ratio:
    /// `***` at 1%, `**` at 5%, `*` at 10% (two-sided normal).
    pub fn stars(&self, k: usize) -> &'static str {
        significance_stars(self.estimates[k], self.robust[k])
    }
}

pub fn significance_stars(estimate: f64, se: f64) -> &'static str {
    if !(se > 0.0) {
        return "";
    }
    let z = (estimate / se).abs();
    if z >= 2.575_829_303_548_901 {
        "***"
    } else if z >= 1.959_963_984_540_054 {
        "**"
    } else if z >= 1.644_853_626_951_472_6 {
        "*"
    } else {
        ""
    }
}

/// Covariances of an M-estimator in its own coordinates.
#[derive(Debug, Clone)]
pub struct Sandwich {
    pub robust: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
    /// Near-zero curvature directions left out of both inverses.
    pub flat_directions: usize,
}

/// Relative step `rel * max(1, |theta_j|)` per coordinate, halved until both
/// `theta +- step e_j` are evaluable (near a constraint boundary of the
/// transform the full step can round onto it).
fn usable_steps<G>(per_obs: &G, theta: &[f64], rel: f64, threads: usize) -> Vec<f64>
where
    G: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    map_indices(theta.len(), threads, |j| {
        let mut step = rel * theta[j].abs().max(1.0);
        for _ in 0..30 {
            let ok = [1.0, -1.0].iter().all(|sign| {
                let mut x = theta.to_vec();
                x[j] += sign * step;
                per_obs(&x).is_some_and(|v| v.iter().all(|l| l.is_finite()))
            });
            if ok {
                break;
            }
            step *= 0.5;
        }
        step
    })
}

/// Sandwich covariance of the maximizer of `mean_t l_t(theta)`.
///
/// `per_obs` returns the vector of `l_t(theta)`; `A` is its mean's numerical
/// Hessian and `B` the mean outer product of per-observation central-difference
/// gradients.
pub fn sandwich<G>(per_obs: &G, theta: &[f64], fd_step: f64, threads: usize) -> Result<Sandwich>
where
    G: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    let k = theta.len();
    let base = per_obs(theta).ok_or_else(|| Error::Internal("objective undefined at estimate".into()))?;
    let n_obs = base.len();
    let nf = n_obs as f64;
    let mean_at = |x: &[f64]| per_obs(x).map_or(f64::NAN, |v| v.iter().sum::<f64>() / nf);
    let f0 = base.iter().sum::<f64>() / nf;

    let steps = usable_steps(per_obs, theta, HESSIAN_STEP, threads);
    let shifted = |pairs: &[(usize, f64)]| {
        let mut x = theta.to_vec();
        for &(j, s) in pairs {
            x[j] += s * steps[j];
        }
        mean_at(&x)
    };
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let entries = map_indices(pairs.len(), threads, |p| {
        let (i, j) = pairs[p];
        if i == j {
            (shifted(&[(i, 1.0)]) - 2.0 * f0 + shifted(&[(i, -1.0)])) / (steps[i] * steps[i])
        } else {
            (shifted(&[(i, 1.0), (j, 1.0)]) - shifted(&[(i, 1.0), (j, -1.0)]) - shifted(&[(i, -1.0), (j, 1.0)])
                + shifted(&[(i, -1.0), (j, -1.0)]))
                / (4.0 * steps[i] * steps[j])
        }
    });
    let mut a = DMatrix::zeros(k, k);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        a[(i, j)] = entries[p];
        a[(j, i)] = entries[p];
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal("non-finite Hessian entry".into()));
    }

    // -A should be positive definite. Eigenvalues within FLAT_TOLERANCE of
    // zero (relative to the largest) are flat directions, typically a
    // parameter pair approaching a boundary of the transform; they are
    // dropped from the inverse. Clearly positive eigenvalues of A are errors.
    let eig = (-&a).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = FLAT_TOLERANCE * scale;
    if let Some((index, &v)) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < -tol)
        .min_by(|x, y| x.1.total_cmp(y.1))
    {
        return Err(Error::IndefiniteHessian { index, eigenvalue: -v });
    }
    if !(scale > 0.0) {
        return Err(Error::IndefiniteHessian { index: 0, eigenvalue: 0.0 });
    }
    let flat_directions = eig.eigenvalues.iter().filter(|v| **v <= tol).count();
    let inv_diag = DVector::from_iterator(k, eig.eigenvalues.iter().map(|&v| if v > tol { 1.0 / v } else { 0.0 }));
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();

    // Per-observation scores.
    let score_steps = usable_steps(per_obs, theta, fd_step, threads);
    let cols = map_indices(k, threads, |j| {
        let h = score_steps[j];
        let mut xp = theta.to_vec();
        let mut xm = theta.to_vec();
        xp[j] += h;
        xm[j] -= h;
        match (per_obs(&xp), per_obs(&xm)) {
            (Some(p), Some(m)) => Some(p.iter().zip(&m).map(|(a, b)| (a - b) / (xp[j] - xm[j])).collect::<Vec<f64>>()),
            _ => None,
        }
    });
    let mut scores = DMatrix::zeros(n_obs, k);
    for (j, col) in cols.into_iter().enumerate() {
        let col = col.ok_or_else(|| Error::Internal("objective undefined near estimate".into()))?;
        scores.set_column(j, &DVector::from_vec(col));
    }
    let b = scores.transpose() * &scores / nf;

    let robust = &inv * b * &inv / nf;
    let hessian = inv / nf;
    Ok(Sandwich {
        robust,
        hessian,
        flat_directions,
    })
}

/// Standard errors at `params` for `panel`, holding the correlation target
/// fixed at `params.correlation.target`.
pub fn standard_errors(panel: &SpreadPanel, params: &SystemParams, config: &FitConfig) -> Result<StandardErrors> {
    let theta = transform::forward(params)?;
    let objective = Objective::new(panel, params.correlation.target.clone(), config.filter_config(), false);
    let nll = |x: &[f64]| objective.mean_neg_log_likelihood(x);
    let g = gradient(&nll, &theta, config.fd_step, config.threads);
    let gn = inf_norm(&g);
    let limit = 10.0 * config.gradient_tolerance;
    if !(gn <= limit) || nll(&theta) >= PENALTY {
        return Err(Error::NotStationary {
            gradient_norm: gn,
            limit,
        });
    }
    let per_obs = |x: &[f64]| objective.log_likelihood(x).ok().map(|l| l.per_week);
    let cov = sandwich(&per_obs, &theta, config.fd_step, config.threads)?;

    let k = theta.len();
    let j = DMatrix::from_row_slice(k, k, &transform::jacobian(&theta));
    let robust = &j * cov.robust * j.transpose();
    let hessian = &j * cov.hessian * j.transpose();
    let diag_se = |m: &DMatrix<f64>| (0..k).map(|i| m[(i, i)].max(0.0).sqrt()).collect::<Vec<f64>>();
    Ok(StandardErrors {
        names: transform::free_names(),
        estimates: transform::free_values(params),
        robust: diag_se(&robust),
        hessian: diag_se(&hessian),
        flat_directions: cov.flat_directions,
    })
}
