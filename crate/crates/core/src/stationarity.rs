//! Augmented Dickey-Fuller and Phillips-Perron unit-root tests.
//!
//! Both default to a regression with an intercept and no trend; pass
//! [`Deterministic::ConstantTrend`] to add a linear trend. Critical values
//! come from MacKinnon's (2010) response surfaces for a single series,
//! evaluated at the number of observations used in the test regression.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MIN_LENGTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Deterministic {
    #[default]
    Constant,
    ConstantTrend,
}

impl Deterministic {
    fn terms(self) -> usize {
        match self {
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }

    /// Response-surface coefficients for the 1%, 5% and 10% levels.
    fn surface(self) -> [[f64; 4]; 3] {
        match self {
            Deterministic::Constant => [
                [-3.43035, -6.5393, -16.786, -79.433],
                [-2.86154, -2.8903, -4.234, -40.040],
                [-2.56677, -1.5384, -2.809, 0.0],
            ],
            Deterministic::ConstantTrend => [
                [-3.95877, -9.0531, -28.428, -134.155],
                [-3.41049, -4.3904, -9.036, -45.374],
                [-3.12705, -2.5856, -3.925, -22.380],
            ],
        }
    }
}

/// Critical values at 1%, 5% and 10% for a sample of `nobs` observations.
pub fn critical_values(det: Deterministic, nobs: usize) -> [f64; 3] {
    let inv = 1.0 / nobs as f64;
    det.surface()
        .map(|c| c[0] + c[1] * inv + c[2] * inv * inv + c[3] * inv * inv * inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Adf,
    Pp,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Adf => "ADF",
            TestKind::Pp => "PP",
        })
    }
}

/// Lag order (ADF) or Bartlett bandwidth (PP).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagChoice {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitRootReport {
    pub series_label: String,
    pub test: TestKind,
    pub statistic: f64,
    pub lags_or_bandwidth: usize,
    /// 1%, 5%, 10%.
    pub critical_values: [f64; 3],
    pub reject_at_5pct: bool,
    pub nobs: usize,
}

struct Regression {
    coef: Vec<f64>,
    se: Vec<f64>,
    resid: Vec<f64>,
    ssr: f64,
}

fn regress(x: &[f64], k: usize, y: &[f64]) -> Result<Regression> {
    let n = y.len();
    if n <= k {
        return Err(Error::DegenerateRegression("fewer observations than regressors".into()));
    }
    let xm = DMatrix::from_row_slice(n, k, x);
    let sv = xm.clone().singular_values();
    if !(sv.max() > 0.0) || sv.min() <= sv.max() * 1e-10 {
        return Err(Error::DegenerateRegression("collinear regressors (constant series?)".into()));
    }
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let inv = xtx
        .cholesky()
        .ok_or_else(|| Error::DegenerateRegression("singular normal equations".into()))?
        .inverse();
    let coef = &inv * (xm.transpose() * &yv);
    let resid = &yv - &xm * &coef;
    let ssr = resid.dot(&resid);
    let scale = yv.amax().max(1e-300);
    if ssr <= (1e-14 * scale).powi(2) * n as f64 {
        return Err(Error::DegenerateRegression("zero residual variance".into()));
    }
    let s2 = ssr / (n - k) as f64;
    Ok(Regression {
        se: (0..k).map(|i| (s2 * inv[(i, i)]).sqrt()).collect(),
        coef: coef.iter().copied().collect(),
        resid: resid.iter().copied().collect(),
        ssr,
    })
}

fn check_series(y: &[f64]) -> Result<()> {
    if y.len() < MIN_LENGTH {
        return Err(Error::TooShort {
            required: MIN_LENGTH,
            actual: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("series contains non-finite values".into()));
    }
    let first = y[0];
    if y.iter().all(|&v| v == first) {
        return Err(Error::DegenerateRegression("series is constant".into()));
    }
    Ok(())
}

/// Design rows `[1, (t), y_{t-1}, dy_{t-1}, ..., dy_{t-p}]` for `t` in
/// `start..len` (indices into `y`).
fn adf_design(y: &[f64], dy: &[f64], p: usize, start: usize, det: Deterministic) -> (Vec<f64>, Vec<f64>, usize) {
    let k = det.terms() + 1 + p;
    let mut x = Vec::new();
    let mut target = Vec::new();
    for t in start..y.len() {
        x.push(1.0);
        if det == Deterministic::ConstantTrend {
            x.push(t as f64);
        }
        x.push(y[t - 1]);
        for j in 1..=p {
            x.push(dy[t - 1 - j]);
        }
        target.push(dy[t - 1]);
    }
    (x, target, k)
}

fn default_max_lag(len: usize) -> usize {
    (12.0 * (len as f64 / 100.0).powf(0.25)).ceil() as usize
}

/// ADF t-ratio on the lagged level. With `LagChoice::Auto` the lag order
/// minimizes AIC over a common sample, then the chosen regression is re-run
/// on all available observations.
pub fn adf_test(y: &[f64], lags: LagChoice, det: Deterministic) -> Result<UnitRootReport> {
    check_series(y)?;
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let p = match lags {
        LagChoice::Fixed(p) => p,
        LagChoice::Auto => {
            let cap = (y.len() / 2).saturating_sub(det.terms() + 1);
            let max_lag = default_max_lag(y.len()).min(cap);
            let mut best = (f64::INFINITY, 0);
            for p in 0..=max_lag {
                let (x, target, k) = adf_design(y, &dy, p, max_lag + 1, det);
                let reg = regress(&x, k, &target)?;
                let n = target.len() as f64;
                let llf = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (reg.ssr / n).ln() + 1.0);
                let aic = -2.0 * llf + 2.0 * k as f64;
                if aic < best.0 {
                    best = (aic, p);
                }
            }
            best.1
        }
    };
    if p + 2 >= y.len() {
        return Err(Error::TooShort {
            required: p + 3,
            actual: y.len(),
        });
    }
    let (x, target, k) = adf_design(y, &dy, p, p + 1, det);
    let reg = regress(&x, k, &target)?;
    let idx = det.terms();
    let stat = reg.coef[idx] / reg.se[idx];
    Ok(report(TestKind::Adf, stat, p, det, target.len()))
}

/// Phillips-Perron `Z_t` with a Bartlett-kernel long-run variance. The
/// automatic bandwidth is `floor(4 (T/100)^(2/9))`.
pub fn pp_test(y: &[f64], bandwidth: LagChoice, det: Deterministic) -> Result<UnitRootReport> {
    check_series(y)?;
    let n = y.len() - 1;
    let k = det.terms() + 1;
    let mut x = Vec::with_capacity(n * k);
    for t in 1..y.len() {
        x.push(1.0);
        if det == Deterministic::ConstantTrend {
            x.push(t as f64);
        }
        x.push(y[t - 1]);
    }
    let reg = regress(&x, k, &y[1..])?;
    let idx = det.terms();
    let t_rho = (reg.coef[idx] - 1.0) / reg.se[idx];
    let l = match bandwidth {
        LagChoice::Fixed(l) => l,
        LagChoice::Auto => (4.0 * (y.len() as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize,
    };
    let u = &reg.resid;
    let nf = n as f64;
    let gamma = |j: usize| u[j..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / nf;
    let gamma0 = gamma(0);
    let mut lambda2 = gamma0;
    for j in 1..=l.min(n - 1) {
        lambda2 += 2.0 * (1.0 - j as f64 / (l as f64 + 1.0)) * gamma(j);
    }
    let s = (reg.ssr / (n - k) as f64).sqrt();
    let stat = (gamma0 / lambda2).sqrt() * t_rho - 0.5 * (lambda2 - gamma0) / lambda2.sqrt() * (nf * reg.se[idx] / s);
    if !stat.is_finite() {
        return Err(Error::DegenerateRegression("non-finite Phillips-Perron statistic".into()));
    }
    Ok(report(TestKind::Pp, stat, l, det, n))
}

fn report(test: TestKind, statistic: f64, lags: usize, det: Deterministic, nobs: usize) -> UnitRootReport {
    let cv = critical_values(det, nobs);
    UnitRootReport {
        series_label: String::new(),
        test,
        statistic,
        lags_or_bandwidth: lags,
        critical_values: cv,
        reject_at_5pct: statistic < cv[1],
        nobs,
    }
}

/// Runs ADF then PP with automatic lag choices on a labelled series.
pub fn pretest(label: &str, y: &[f64]) -> Result<[UnitRootReport; 2]> {
    let mut adf = adf_test(y, LagChoice::Auto, Deterministic::Constant)?;
    let mut pp = pp_test(y, LagChoice::Auto, Deterministic::Constant)?;
    adf.series_label = label.to_string();
    pp.series_label = label.to_string();
    Ok([adf, pp])
}
