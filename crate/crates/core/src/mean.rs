//! AR(1) conditional means. Equation 5 (PFB-TB) carries the treasury-yield
//! covariate; the other four are plain AR(1).

use crate::data::{SpreadPanel, N_SERIES};
use crate::error::{Error, Result};

/// Index of the spread that carries the covariate term.
pub const COVARIATE_EQUATION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanParams {
    pub mu: [f64; N_SERIES],
    pub phi: [f64; N_SERIES],
    /// Coefficient on the contemporaneous TB yield in the PFB-TB equation.
    pub tau: f64,
}

impl MeanParams {
    pub fn validate(&self) -> Result<()> {
        for i in 0..N_SERIES {
            if !self.mu[i].is_finite() || !(self.phi[i].abs() < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "mean equation {}: need finite mu and |phi| < 1 (mu={}, phi={})",
                    i + 1,
                    self.mu[i],
                    self.phi[i]
                )));
            }
        }
        if !self.tau.is_finite() {
            return Err(Error::InvalidParams("tau must be finite".into()));
        }
        Ok(())
    }

    fn fitted(&self, i: usize, lag: f64, b: f64) -> f64 {
        let mut m = self.mu[i] + self.phi[i] * lag;
        if i == COVARIATE_EQUATION {
            m += self.tau * b;
        }
        m
    }
}

/// Innovations `r[i][t-1]` for weeks `t = 2..T`; the first week is the lag
/// seed and produces no innovation.
pub fn mean_filter(panel: &SpreadPanel, params: &MeanParams) -> Result<Vec<Vec<f64>>> {
    let weeks = panel.weeks();
    if weeks.len() < 2 {
        return Err(Error::TooShort {
            required: 2,
            actual: weeks.len(),
        });
    }
    let mut r = (0..N_SERIES).map(|_| Vec::with_capacity(weeks.len() - 1)).collect::<Vec<_>>();
    for pair in weeks.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        for (i, ri) in r.iter_mut().enumerate() {
            ri.push(cur.x[i] - params.fitted(i, prev.x[i], cur.b));
        }
    }
    Ok(r)
}

/// Inverse of [`mean_filter`]: rebuilds spread levels from innovations.
///
/// `b` holds the covariate for every output week, so `b.len()` must be one
/// more than the innovation length. The returned path starts with `x0`.
pub fn mean_unfilter(
    innovations: &[Vec<f64>],
    params: &MeanParams,
    x0: [f64; N_SERIES],
    b: &[f64],
) -> Result<Vec<[f64; N_SERIES]>> {
    if innovations.len() != N_SERIES {
        return Err(Error::InvalidParams(format!(
            "expected {N_SERIES} innovation series, got {}",
            innovations.len()
        )));
    }
    let len = innovations[0].len();
    if innovations.iter().any(|s| s.len() != len) || b.len() != len + 1 {
        return Err(Error::InvalidParams(
            "innovation series and covariate lengths disagree".into(),
        ));
    }
    let mut out = Vec::with_capacity(len + 1);
    out.push(x0);
    for t in 0..len {
        let prev = out[t];
        let mut x = [0.0; N_SERIES];
        for i in 0..N_SERIES {
            x[i] = params.fitted(i, prev[i], b[t + 1]) + innovations[i][t];
        }
        out.push(x);
    }
    Ok(out)
}
