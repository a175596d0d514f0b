//! Student-t quasi-likelihood of the full AR(1)-DCC(1,1)-GARCH(1,1) system.
//!
//! Innovations are modelled as `r_t ~ t_nu(0, Sigma_t)` with
//! `Sigma_t = H_t (nu - 2) / nu`, so `H_t = D_t R_t D_t` is the conditional
//! covariance itself. The density is evaluated through `D_t` and a Cholesky
//! factor of `R_t`:
//!
//! ```text
//! l_t = lnG((nu+n)/2) - lnG(nu/2) - n/2 ln((nu-2) pi)
//!       - 1/2 (sum_i ln h_it + ln|R_t|)
//!       - (nu+n)/2 ln(1 + eps_t' R_t^{-1} eps_t / (nu-2))
//! ```
//!
//! A single scalar `nu` is shared by all five series.

use crate::correlation::{self, CorrelationPath, DccParams, QInit};
use crate::data::{SpreadPanel, N_SERIES};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mean::{self, MeanParams};
use crate::variance::{self, GarchParams, HInit};

/// Largest accepted condition estimate of `R_t`.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub mean: MeanParams,
    pub variance: GarchParams,
    pub correlation: DccParams,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.mean.validate()?;
        self.variance.validate()?;
        self.correlation.validate()?;
        if self.correlation.n != N_SERIES {
            return Err(Error::InvalidParams(format!(
                "correlation target must be {N_SERIES}x{N_SERIES}"
            )));
        }
        Ok(())
    }

    /// Published point estimates of the penta-variate system, completed with
    /// `nu = 8` and a fixed positive-definite correlation target (neither is
    /// reported). Used as simulation truth.
    pub fn reference() -> Self {
        Self {
            mean: MeanParams {
                mu: [0.914, 1.052, 0.636, 1.764, 0.947],
                phi: [0.888, 0.816, 0.735, 0.948, 0.944],
                tau: -0.224,
            },
            variance: GarchParams {
                omega: [0.006, 0.024, 0.016, 0.029, 0.002],
                kappa: [0.432, 0.526, 0.125, 0.756, 0.316],
                lambda: [0.567, 0.473, 0.768, 0.243, 0.575],
            },
            correlation: DccParams {
                alpha: 0.033,
                beta: 0.945,
                target: REFERENCE_TARGET.to_vec(),
                n: N_SERIES,
                nu: 8.0,
            },
        }
    }
}

/// Correlation target used with [`SystemParams::reference`]. Order: Shibor,
/// IR, ER, CP, PFB spreads.
#[rustfmt::skip]
pub const REFERENCE_TARGET: [f64; 25] = [
    1.00, 0.60, 0.35, 0.30, 0.30,
    0.60, 1.00, 0.40, 0.30, 0.35,
    0.35, 0.40, 1.00, 0.20, 0.20,
    0.30, 0.30, 0.20, 1.00, 0.40,
    0.30, 0.35, 0.20, 0.40, 1.00,
];

/// Initial conditions of the variance and correlation recursions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterConfig {
    pub h_init: HInit,
    pub q_init: QInit,
}

/// Everything the filter stack produces for one parameter point.
#[derive(Debug, Clone)]
pub struct FilterState {
    /// `r[i][t]`, innovation weeks `t = 0..T-1`.
    pub innovations: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub standardized: Vec<Vec<f64>>,
    pub path: CorrelationPath,
}

pub fn filter(panel: &SpreadPanel, params: &SystemParams, config: &FilterConfig) -> Result<FilterState> {
    params.validate()?;
    let r = mean::mean_filter(panel, &params.mean)?;
    let h0 = config.h_init.resolve(&r);
    let h = variance::garch_filter(&r, &params.variance, h0)?;
    let eps = variance::standardize(&r, &h);
    let path = correlation::dcc_filter_with(&eps, &params.correlation, &config.q_init)?;
    Ok(FilterState {
        innovations: r,
        variances: h,
        standardized: eps,
        path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihood {
    pub total: f64,
    /// One term per innovation week (`T - 1` entries).
    pub per_week: Vec<f64>,
}

pub fn log_likelihood(panel: &SpreadPanel, params: &SystemParams) -> Result<LogLikelihood> {
    log_likelihood_with(panel, params, &FilterConfig::default())
}

pub fn log_likelihood_with(
    panel: &SpreadPanel,
    params: &SystemParams,
    config: &FilterConfig,
) -> Result<LogLikelihood> {
    let state = filter(panel, params, config)?;
    likelihood_of_state(&state, params.correlation.nu)
}

/// Sums the per-week Student-t terms of an already filtered state.
pub fn likelihood_of_state(state: &FilterState, nu: f64) -> Result<LogLikelihood> {
    let n = state.path.n();
    let len = state.path.len();
    let constant = t_constant(nu, n);
    let shape = 0.5 * (nu + n as f64);
    let mut chol = vec![0.0; n * n];
    let mut z = vec![0.0; n];
    let mut per_week = Vec::with_capacity(len);
    for t in 0..len {
        chol.copy_from_slice(state.path.r(t));
        if linalg::cholesky_in_place(&mut chol, n).is_none() {
            return Err(Error::Singular {
                week: t,
                condition: f64::INFINITY,
            });
        }
        let cond = linalg::cholesky_condition_estimate(&chol, n);
        if cond > CONDITION_LIMIT {
            return Err(Error::Singular { week: t, condition: cond });
        }
        let mut log_det = 0.0;
        for i in 0..n {
            let h = state.variances[i][t];
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::NonFinite { week: t });
            }
            log_det += h.ln() + 2.0 * chol[i * n + i].ln();
            z[i] = state.standardized[i][t];
        }
        linalg::forward_substitute(&chol, n, &mut z);
        let quad: f64 = z.iter().map(|v| v * v).sum();
        let term = constant - 0.5 * log_det - shape * (quad / (nu - 2.0)).ln_1p();
        if !term.is_finite() {
            return Err(Error::NonFinite { week: t });
        }
        per_week.push(term);
    }
    Ok(LogLikelihood {
        total: per_week.iter().sum(),
        per_week,
    })
}

fn t_constant(nu: f64, n: usize) -> f64 {
    let n = n as f64;
    libm::lgamma(0.5 * (nu + n)) - libm::lgamma(0.5 * nu) - 0.5 * n * ((nu - 2.0) * std::f64::consts::PI).ln()
}

/// Log density of `x` under an `n`-variate Student-t whose covariance (not
/// scale) matrix is `cov`, using a Cholesky factor of `cov` directly.
pub fn mvt_log_density(x: &[f64], cov: &[f64], nu: f64) -> Result<f64> {
    let n = x.len();
    let mut l = cov.to_vec();
    linalg::cholesky_in_place(&mut l, n)
        .ok_or_else(|| Error::NotPositiveDefinite("covariance".into()))?;
    let mut z = x.to_vec();
    linalg::forward_substitute(&l, n, &mut z);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let log_det: f64 = (0..n).map(|i| 2.0 * l[i * n + i].ln()).sum();
    Ok(t_constant(nu, n) - 0.5 * log_det - 0.5 * (nu + n as f64) * (quad / (nu - 2.0)).ln_1p())
}
