//! Univariate GARCH(1,1) recursions, one per spread.

use crate::data::N_SERIES;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub omega: [f64; N_SERIES],
    pub kappa: [f64; N_SERIES],
    pub lambda: [f64; N_SERIES],
}

impl GarchParams {
    pub fn validate(&self) -> Result<()> {
        for i in 0..N_SERIES {
            self.series(i).validate().map_err(|e| match e {
                Error::InvalidParams(m) => Error::InvalidParams(format!("series {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn series(&self, i: usize) -> SeriesGarch {
        SeriesGarch {
            omega: self.omega[i],
            kappa: self.kappa[i],
            lambda: self.lambda[i],
        }
    }

    /// `omega / (1 - kappa - lambda)` per series.
    pub fn unconditional_variance(&self) -> [f64; N_SERIES] {
        std::array::from_fn(|i| self.series(i).unconditional_variance())
    }
}

/// GARCH(1,1) coefficients of a single series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesGarch {
    pub omega: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl SeriesGarch {
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega > 0.0
            && self.omega.is_finite()
            && self.kappa >= 0.0
            && self.lambda >= 0.0
            && self.kappa + self.lambda < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "need omega > 0, kappa, lambda >= 0 and kappa + lambda < 1 (omega={}, kappa={}, lambda={})",
                self.omega, self.kappa, self.lambda
            )))
        }
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.kappa - self.lambda)
    }

    /// `h[0] = h_init`, `h[t] = omega + kappa r[t-1]^2 + lambda h[t-1]`.
    pub fn filter(&self, r: &[f64], h_init: f64) -> Vec<f64> {
        let mut h = Vec::with_capacity(r.len());
        if r.is_empty() {
            return h;
        }
        h.push(h_init);
        for t in 1..r.len() {
            let prev = h[t - 1];
            h.push(self.omega + self.kappa * r[t - 1] * r[t - 1] + self.lambda * prev);
        }
        h
    }
}

/// Starting value for the variance recursions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum HInit {
    /// Sample variance of each innovation series.
    #[default]
    SampleVariance,
    Fixed([f64; N_SERIES]),
}

impl HInit {
    pub fn resolve(&self, r: &[Vec<f64>]) -> [f64; N_SERIES] {
        match self {
            HInit::SampleVariance => std::array::from_fn(|i| linalg::variance(&r[i])),
            HInit::Fixed(h) => *h,
        }
    }
}

/// Conditional variances for all five innovation series.
pub fn garch_filter(r: &[Vec<f64>], params: &GarchParams, h_init: [f64; N_SERIES]) -> Result<Vec<Vec<f64>>> {
    if r.len() != N_SERIES {
        return Err(Error::InvalidParams(format!(
            "expected {N_SERIES} innovation series, got {}",
            r.len()
        )));
    }
    params.validate()?;
    if let Some(i) = h_init.iter().position(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParams(format!(
            "initial variance for series {} must be positive, got {}",
            i + 1,
            h_init[i]
        )));
    }
    Ok((0..N_SERIES)
        .map(|i| params.series(i).filter(&r[i], h_init[i]))
        .collect())
}

/// `eps[i][t] = r[i][t] / sqrt(h[i][t])`.
pub fn standardize(r: &[Vec<f64>], h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    r.iter()
        .zip(h)
        .map(|(ri, hi)| ri.iter().zip(hi).map(|(x, v)| x / v.sqrt()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(omega: f64, kappa: f64, lambda: f64) -> GarchParams {
        GarchParams {
            omega: [omega; 5],
            kappa: [kappa; 5],
            lambda: [lambda; 5],
        }
    }

    #[test]
    fn constant_variance_reduction() {
        let r: Vec<Vec<f64>> = (0..5).map(|i| (0..20).map(|t| (t as f64 + i as f64).cos()).collect()).collect();
        let h = garch_filter(&r, &uniform(0.3, 0.0, 0.0), [1.7; 5]).unwrap();
        for hi in &h {
            assert_eq!(hi[0], 1.7);
            assert!(hi[1..].iter().all(|&v| v == 0.3));
        }
    }

    #[test]
    fn single_step_at_reference_point() {
        let g = SeriesGarch {
            omega: 0.024,
            kappa: 0.526,
            lambda: 0.473,
        };
        let h = g.filter(&[0.2, 0.0], 0.5);
        assert!((h[1] - 0.28154).abs() < 1e-12);
    }

    #[test]
    fn converges_to_fixed_point_without_shocks() {
        let g = SeriesGarch {
            omega: 0.01,
            kappa: 0.3,
            lambda: 0.5,
        };
        let h = g.filter(&vec![0.0; 60], 1.0);
        // h_t - 0.02 = 0.5^(t) * (1 - 0.02)
        for (t, v) in h.iter().enumerate() {
            let expect = 0.02 + 0.98 * 0.5f64.powi(t as i32);
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_init_and_params() {
        let r = vec![vec![0.1; 3]; 5];
        assert!(garch_filter(&r, &uniform(0.1, 0.1, 0.8), [1.0, 1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(garch_filter(&r, &uniform(0.1, 0.5, 0.5), [1.0; 5]).is_err());
        assert!(garch_filter(&r, &uniform(0.0, 0.1, 0.5), [1.0; 5]).is_err());
    }

    #[test]
    fn standardize_cases() {
        let e = standardize(&[vec![0.3, 0.0]], &[vec![0.09, 2.0]]);
        assert!((e[0][0] - 1.0).abs() < 1e-15);
        assert_eq!(e[0][1], 0.0);
    }

    proptest! {
        #[test]
        fn positivity_and_round_trip(
            r in prop::collection::vec(-50.0f64..50.0, 2..60),
            omega in 1e-6f64..1.0,
            kappa in 0.0f64..0.5,
            lambda in 0.0f64..0.49,
            h0 in 1e-4f64..10.0,
        ) {
            let g = SeriesGarch { omega, kappa, lambda };
            let h = g.filter(&r, h0);
            prop_assert!(h.iter().all(|&v| v > 0.0));
            let e = standardize(std::slice::from_ref(&r), std::slice::from_ref(&h));
            for t in 0..r.len() {
                prop_assert!((e[0][t] * h[t].sqrt() - r[t]).abs() <= 1e-15 * r[t].abs().max(1.0) * 4.0);
            }
        }

        #[test]
        fn larger_shock_never_lowers_variance(
            r in prop::collection::vec(-5.0f64..5.0, 3..30),
            k in 0usize..2,
            bump in 0.0f64..3.0,
        ) {
            let g = SeriesGarch { omega: 0.05, kappa: 0.2, lambda: 0.7 };
            let base = g.filter(&r, 1.0);
            let mut r2 = r.clone();
            r2[k] = r[k].signum() * (r[k].abs() + bump);
            let bumped = g.filter(&r2, 1.0);
            for t in 0..r.len() {
                prop_assert!(bumped[t] >= base[t]);
            }
        }
    }
}
