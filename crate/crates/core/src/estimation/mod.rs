//! Quasi-maximum-likelihood fitting of the full system.
//!
//! Fitting runs in the unconstrained coordinates of [`transform`]. The
//! correlation target `S` is fixed at the normalized second-moment matrix of
//! the standardized residuals at the starting point (correlation targeting),
//! unless [`FitConfig::retarget_correlation`] asks for it to be recomputed
//! at every evaluation.

pub mod optimizer;
pub mod stderr;
pub mod transform;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::correlation::{self, ComovementSeries, DccParams, QInit};
use crate::data::{SpreadPanel, N_SERIES};
use crate::error::{Error, Result};
use crate::likelihood::{self, FilterConfig, LogLikelihood, SystemParams};
use crate::linalg;
use crate::mean::{MeanParams, COVARIATE_EQUATION};
use crate::variance::{self, GarchParams, HInit, SeriesGarch};

pub use optimizer::{Minimum, MinimizerConfig, Termination};
pub use stderr::{significance_stars, standard_errors, StandardErrors};

/// Shortest panel accepted by [`initialize`] and [`fit`].
pub const MIN_WEEKS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stage {
    /// OLS means, per-series Gaussian GARCH fits, then the joint fit.
    #[default]
    TwoStageInitThenJoint,
    /// OLS means and generic GARCH starting values, then the joint fit.
    JointOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub stage: Stage,
    /// Seed for the jittered extra starting points.
    pub seed: u64,
    /// Number of jittered starts in addition to the initializer.
    pub multistart: usize,
    pub h_init: HInit,
    pub retarget_correlation: bool,
    pub fd_step: f64,
    /// Parallel objective evaluations; 0 is the sequential reference mode.
    pub threads: usize,
    pub standard_errors: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            gradient_tolerance: 1e-5,
            step_tolerance: 1e-9,
            stage: Stage::default(),
            seed: 0,
            multistart: 0,
            h_init: HInit::SampleVariance,
            retarget_correlation: false,
            fd_step: 1e-5,
            threads: 0,
            standard_errors: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0 && self.fd_step > 0.0) {
            return Err(Error::Config("tolerances and fd_step must be positive".into()));
        }
        Ok(())
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            h_init: self.h_init,
            q_init: QInit::Target,
        }
    }

    fn minimizer(&self) -> MinimizerConfig {
        MinimizerConfig {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            step_tolerance: self.step_tolerance,
            fd_step: self.fd_step,
            threads: self.threads,
            ..MinimizerConfig::default()
        }
    }
}

/// Negative log-likelihood as a total function of unconstrained coordinates.
pub struct Objective<'a> {
    panel: &'a SpreadPanel,
    target: Vec<f64>,
    filter: FilterConfig,
    retarget: bool,
}

impl<'a> Objective<'a> {
    pub fn new(panel: &'a SpreadPanel, target: Vec<f64>, filter: FilterConfig, retarget: bool) -> Self {
        Self {
            panel,
            target,
            filter,
            retarget,
        }
    }

    /// Parameters at `theta`; with re-targeting the returned `S` is the one
    /// implied by `theta`'s standardized residuals.
    pub fn params(&self, theta: &[f64]) -> Result<SystemParams> {
        let mut p = transform::inverse(theta, &self.target);
        if self.retarget {
            let state = likelihood::filter(self.panel, &p, &self.filter)?;
            p.correlation.target = correlation_target(&state.standardized);
        }
        Ok(p)
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> Result<LogLikelihood> {
        let p = self.params(theta)?;
        likelihood::log_likelihood_with(self.panel, &p, &self.filter)
    }

    /// `-log L(theta)`, or [`optimizer::PENALTY`] where the likelihood is
    /// undefined. Never NaN.
    pub fn neg_log_likelihood(&self, theta: &[f64]) -> f64 {
        if theta.iter().any(|v| !v.is_finite()) {
            return optimizer::PENALTY;
        }
        match self.log_likelihood(theta) {
            Ok(l) if l.total.is_finite() => (-l.total).min(optimizer::PENALTY),
            _ => optimizer::PENALTY,
        }
    }

    /// `-log L(theta)` divided by the number of innovation weeks: the
    /// function the optimizer minimizes and whose gradient the convergence
    /// test measures. [`optimizer::PENALTY`] where undefined.
    pub fn mean_neg_log_likelihood(&self, theta: &[f64]) -> f64 {
        let v = self.neg_log_likelihood(theta);
        if v >= optimizer::PENALTY {
            v
        } else {
            v / (self.panel.len() - 1) as f64
        }
    }
}

/// `E[eps eps']` over the sample, normalized to unit diagonal.
pub fn correlation_target(eps: &[Vec<f64>]) -> Vec<f64> {
    let n = eps.len();
    let len = eps[0].len() as f64;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = eps[i].iter().zip(&eps[j]).map(|(a, b)| a * b).sum::<f64>() / len;
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    correlation::normalize_q(&m, n).unwrap_or_else(|_| {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        id
    })
}

/// Per-equation OLS of the mean equations; equation 5 includes `B_t`.
pub fn ols_mean(panel: &SpreadPanel) -> Result<MeanParams> {
    let weeks = panel.weeks();
    let mut mu = [0.0; N_SERIES];
    let mut phi = [0.0; N_SERIES];
    let mut tau = 0.0;
    for i in 0..N_SERIES {
        let with_b = i == COVARIATE_EQUATION;
        let k = if with_b { 3 } else { 2 };
        let mut design = Vec::with_capacity(k * weeks.len());
        let mut y = Vec::with_capacity(weeks.len());
        for w in weeks.windows(2) {
            design.push(1.0);
            design.push(w[0].x[i]);
            if with_b {
                design.push(w[1].b);
            }
            y.push(w[1].x[i]);
        }
        let fit = linalg::ols(&design, k, &y).ok_or(Error::RankDeficient { equation: i + 1 })?;
        mu[i] = fit.coef[0];
        phi[i] = fit.coef[1].clamp(-0.995, 0.995);
        if with_b {
            tau = fit.coef[2];
        }
    }
    Ok(MeanParams { mu, phi, tau })
}

/// Keeps GARCH starting values strictly inside the stationarity region.
fn interior(g: SeriesGarch) -> SeriesGarch {
    let kappa = g.kappa.max(1e-4);
    let lambda = g.lambda.max(1e-4);
    let excess = (kappa + lambda - 0.9999).max(0.0);
    SeriesGarch {
        omega: g.omega.max(1e-10),
        kappa: kappa - excess * kappa / (kappa + lambda),
        lambda: lambda - excess * lambda / (kappa + lambda),
    }
}

/// Gaussian quasi-likelihood GARCH(1,1) fit of a single innovation series.
pub fn fit_series_garch(r: &[f64], h_init: f64) -> SeriesGarch {
    let var = linalg::variance(r).max(1e-12);
    let start = SeriesGarch {
        omega: 0.05 * var,
        kappa: 0.10,
        lambda: 0.85,
    };
    let to_theta = |g: &SeriesGarch| {
        let rest = 1.0 - g.kappa - g.lambda;
        [g.omega.ln(), (g.kappa / rest).ln(), (g.lambda / rest).ln()]
    };
    let from_theta = |t: &[f64]| {
        let v = transform::inverse_values(&embed_series_theta(t));
        SeriesGarch {
            omega: v[11],
            kappa: v[16],
            lambda: v[21],
        }
    };
    let nll = |t: &[f64]| {
        let g = from_theta(t);
        let h = g.filter(r, h_init);
        let mut s = 0.0;
        for (x, v) in r.iter().zip(&h) {
            s += 0.5 * (v.ln() + x * x / v);
        }
        s
    };
    let cfg = MinimizerConfig {
        max_iterations: 300,
        gradient_tolerance: 1e-6 * r.len() as f64,
        ..MinimizerConfig::default()
    };
    let m = optimizer::minimize(&nll, &to_theta(&start), &cfg);
    let best = if m.value < nll(&to_theta(&start)) { from_theta(&m.x) } else { start };
    interior(best)
}

fn embed_series_theta(t: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; transform::N_FREE];
    full[11] = t[0];
    full[16] = t[1];
    full[21] = t[2];
    full
}

fn starting_params(panel: &SpreadPanel, stage: Stage, h_init: HInit) -> Result<SystemParams> {
    if panel.len() < MIN_WEEKS {
        return Err(Error::TooShort {
            required: MIN_WEEKS,
            actual: panel.len(),
        });
    }
    let mean = ols_mean(panel)?;
    let r = crate::mean::mean_filter(panel, &mean)?;
    let h0 = h_init.resolve(&r);
    let series: Vec<SeriesGarch> = (0..N_SERIES)
        .map(|i| match stage {
            Stage::TwoStageInitThenJoint => fit_series_garch(&r[i], h0[i]),
            Stage::JointOnly => SeriesGarch {
                omega: 0.05 * linalg::variance(&r[i]).max(1e-12),
                kappa: 0.10,
                lambda: 0.85,
            },
        })
        .collect();
    let variance = GarchParams {
        omega: std::array::from_fn(|i| series[i].omega),
        kappa: std::array::from_fn(|i| series[i].kappa),
        lambda: std::array::from_fn(|i| series[i].lambda),
    };
    let h = variance::garch_filter(&r, &variance, h0)?;
    let eps = variance::standardize(&r, &h);
    Ok(SystemParams {
        mean,
        variance,
        correlation: DccParams {
            alpha: 0.05,
            beta: 0.90,
            target: correlation_target(&eps),
            n: N_SERIES,
            nu: 8.0,
        },
    })
}

/// Staged starting values: OLS means, per-series GARCH fits on the OLS
/// residuals, targeted `S`, `(alpha, beta) = (0.05, 0.90)` and `nu = 8`.
pub fn initialize(panel: &SpreadPanel) -> Result<SystemParams> {
    starting_params(panel, Stage::TwoStageInitThenJoint, HInit::SampleVariance)
}

pub fn initialize_with(panel: &SpreadPanel, config: &FitConfig) -> Result<SystemParams> {
    starting_params(panel, config.stage, config.h_init)
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: SystemParams,
    pub std_errors: Option<StandardErrors>,
    /// Why standard errors are missing, when they are.
    pub std_error_note: Option<String>,
    pub loglik: f64,
    pub initial_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub termination: Termination,
    pub weeks: usize,
    pub comovements: ComovementSeries,
}

/// Maximizes the quasi-likelihood from `start`.
pub fn fit_from(panel: &SpreadPanel, start: &SystemParams, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    if panel.len() < MIN_WEEKS {
        return Err(Error::TooShort {
            required: MIN_WEEKS,
            actual: panel.len(),
        });
    }
    let theta0 = transform::forward(start)?;
    let objective = Objective::new(
        panel,
        start.correlation.target.clone(),
        config.filter_config(),
        config.retarget_correlation,
    );
    let nll = |x: &[f64]| objective.mean_neg_log_likelihood(x);
    let initial = objective.neg_log_likelihood(&theta0);
    if initial >= optimizer::PENALTY {
        return Err(Error::InvalidParams("likelihood undefined at the starting point".into()));
    }

    let mut starts = vec![theta0.clone()];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let jitter = Normal::new(0.0, 0.1).expect("valid normal");
    for _ in 0..config.multistart {
        starts.push(theta0.iter().map(|t| t + jitter.sample(&mut rng)).collect());
    }
    let mut best: Option<Minimum> = None;
    for s in &starts {
        let m = optimizer::minimize(&nll, s, &config.minimizer());
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");

    let params = drop_unidentified_beta(panel, objective.params(&best.x)?, &config.filter_config());
    let filter_cfg = config.filter_config();
    let state = likelihood::filter(panel, &params, &filter_cfg)?;
    let loglik = likelihood::likelihood_of_state(&state, params.correlation.nu)?.total;
    let comovements = correlation::extract_comovements(&state.path, &panel.dates()[1..])?;

    let (std_errors, std_error_note) = if config.standard_errors {
        match standard_errors(panel, &params, config) {
            Ok(se) => (Some(se), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("not requested".into()))
    };

    Ok(FitReport {
        params,
        std_errors,
        std_error_note,
        loglik,
        initial_loglik: -initial,
        iterations: best.iterations,
        converged: best.converged,
        gradient_norm: best.gradient_norm(),
        termination: best.termination,
        weeks: panel.len(),
        comovements,
    })
}

/// `alpha` below which news no longer moves `Q_t` in double precision.
const NEGLIGIBLE_ALPHA: f64 = 1e-12;

/// With `alpha` at zero every `beta` gives `Q_t = S`, so `beta` is not
/// identified and the optimizer leaves it wherever it drifted (often near
/// one). Report the constant-correlation representative `beta = 0` when it
/// has the same likelihood.
fn drop_unidentified_beta(panel: &SpreadPanel, params: SystemParams, filter: &FilterConfig) -> SystemParams {
    if params.correlation.alpha >= NEGLIGIBLE_ALPHA || params.correlation.beta == 0.0 {
        return params;
    }
    let mut reduced = params.clone();
    reduced.correlation.beta = 0.0;
    let ll = |p: &SystemParams| likelihood::log_likelihood_with(panel, p, filter).map(|l| l.total);
    match (ll(&params), ll(&reduced)) {
        (Ok(a), Ok(b)) if b >= a - 1e-9 * a.abs().max(1.0) => reduced,
        _ => params,
    }
}

/// Initializes per `config.stage` and runs the joint fit.
pub fn fit(panel: &SpreadPanel, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let start = initialize_with(panel, config)?;
    fit_from(panel, &start, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SpreadWeek;
    use chrono::{Days, NaiveDate};

    fn panel_from(x: impl Fn(usize) -> [f64; 5], b: impl Fn(usize) -> f64, len: usize) -> SpreadPanel {
        let d0 = NaiveDate::from_ymd_opt(2012, 1, 6).unwrap();
        SpreadPanel::new(
            (0..len)
                .map(|t| SpreadWeek {
                    week_end: d0 + Days::new(7 * t as u64),
                    x: x(t),
                    b: b(t),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_covariate_is_rank_deficient() {
        let p = panel_from(|t| std::array::from_fn(|i| ((t * (i + 3)) as f64).sin()), |_| 3.0, 40);
        assert!(matches!(initialize(&p), Err(Error::RankDeficient { equation: 5 })));
    }

    #[test]
    fn short_panel_is_rejected() {
        let p = panel_from(|t| [t as f64; 5], |t| t as f64, 5);
        assert!(matches!(fit(&p, &FitConfig::default()), Err(Error::TooShort { .. })));
    }

    #[test]
    fn target_has_unit_diagonal() {
        let eps = vec![vec![1.0, -2.0, 0.5], vec![0.3, 1.0, 2.0]];
        let s = correlation_target(&eps);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[3], 1.0);
        let expect = (0.3 - 2.0 + 1.0) / ((1.0_f64 + 4.0 + 0.25) * (0.09 + 1.0 + 4.0)).sqrt();
        assert!((s[1] - expect).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_likelihood_and_is_well_defined() {
        let p = crate::simulation::simulate(&crate::simulation::SimSpec::new(SystemParams::reference(), 60, 3))
            .unwrap()
            .panel;
        let params = SystemParams::reference();
        let obj = Objective::new(&p, params.correlation.target.clone(), FilterConfig::default(), false);
        let theta = transform::forward(&params).unwrap();
        let ll = likelihood::log_likelihood(&p, &params).unwrap().total;
        assert!((obj.neg_log_likelihood(&theta) + ll).abs() < 1e-10 * ll.abs());
        // alpha + beta pushed towards one along the transform stays finite.
        for scale in [1.0, 5.0, 20.0, 100.0] {
            let mut t = theta.clone();
            t[26] += scale;
            t[27] += scale;
            let v = obj.neg_log_likelihood(&t);
            assert!(v.is_finite());
        }
        assert_eq!(obj.neg_log_likelihood(&[f64::NAN; 29]), optimizer::PENALTY);
    }
}
