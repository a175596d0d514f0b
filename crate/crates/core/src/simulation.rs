//! Generative simulation of the system and the bundled daily fixture.
//!
//! Draw order per week, from a single ChaCha8 stream seeded with
//! `SimSpec::seed`: one chi-square(nu) variate, five standard normals, then
//! the covariate's normal shock (AR(1) policy only). The unit-covariance
//! Student-t vector is `z * sqrt((nu - 2) / chi2)`.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::correlation::{normalize_q, COMOVEMENT_PAIRS};
use crate::data::{SpreadPanel, SpreadWeek, N_SERIES};
use crate::error::{Error, Result};
use crate::likelihood::SystemParams;
use crate::linalg;
use crate::mean::{mean_unfilter, COVARIATE_EQUATION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariatePolicy {
    Constant(f64),
    /// `B_t = mean + persistence (B_{t-1} - mean) + sd * N(0,1)`.
    Ar1 { mean: f64, persistence: f64, sd: f64 },
}

impl Default for CovariatePolicy {
    fn default() -> Self {
        CovariatePolicy::Ar1 {
            mean: 3.0,
            persistence: 0.95,
            sd: 0.15,
        }
    }
}

impl CovariatePolicy {
    fn level(&self) -> f64 {
        match *self {
            CovariatePolicy::Constant(b) => b,
            CovariatePolicy::Ar1 { mean, .. } => mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub params: SystemParams,
    pub weeks: usize,
    pub seed: u64,
    pub covariate: CovariatePolicy,
    pub burn_in: usize,
    /// `week_end` of the first retained week; later weeks follow every 7 days.
    pub start: NaiveDate,
}

impl SimSpec {
    pub fn new(params: SystemParams, weeks: usize, seed: u64) -> Self {
        Self {
            params,
            weeks,
            seed,
            covariate: CovariatePolicy::default(),
            burn_in: 200,
            start: NaiveDate::from_ymd_opt(2011, 6, 17).expect("valid date"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weeks < 10 {
            return Err(Error::InvalidParams(format!("simulation needs at least 10 weeks, got {}", self.weeks)));
        }
        if let CovariatePolicy::Ar1 { persistence, sd, mean } = self.covariate {
            if !(persistence.abs() < 1.0 && sd >= 0.0 && mean.is_finite()) {
                return Err(Error::InvalidParams("covariate AR(1) needs |persistence| < 1 and sd >= 0".into()));
            }
        }
        self.params.validate()
    }
}

/// A simulated panel with the internal recursions that generated it.
///
/// `variances`, `q` and `standardized` are aligned with the panel's
/// innovation weeks (panel weeks `2..=T`), exactly as the filter reports them.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub panel: SpreadPanel,
    pub innovations: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub standardized: Vec<Vec<f64>>,
    /// Row-major `Q_t` per innovation week.
    pub q: Vec<Vec<f64>>,
    /// Row-major `R_t` per innovation week.
    pub r: Vec<Vec<f64>>,
}

/// Draws one unit-covariance Student-t vector.
pub fn draw_unit_t<R: Rng>(rng: &mut R, nu: f64) -> [f64; N_SERIES] {
    let chi = ChiSquared::new(nu).expect("nu > 0");
    let w: f64 = chi.sample(rng);
    let scale = ((nu - 2.0) / w).sqrt();
    std::array::from_fn(|_| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

pub fn simulate(spec: &SimSpec) -> Result<Simulation> {
    spec.validate()?;
    let p = &spec.params;
    let n = N_SERIES;
    let total = spec.burn_in + spec.weeks;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = &p.correlation.target;
    let (a, b) = (p.correlation.alpha, p.correlation.beta);

    let mut h = p.variance.unconditional_variance();
    let mut q = s.clone();
    let mut prev_r = [0.0; N_SERIES];
    let mut prev_eps = [0.0; N_SERIES];
    let mut b_prev = spec.covariate.level();

    let mut r_all = (0..n).map(|_| Vec::with_capacity(total)).collect::<Vec<_>>();
    let mut b_all = Vec::with_capacity(total);
    let mut h_all = Vec::with_capacity(total);
    let mut eps_all = Vec::with_capacity(total);
    let mut q_all = Vec::with_capacity(total);
    let mut rmat_all = Vec::with_capacity(total);
    let mut chol = vec![0.0; n * n];
    for k in 0..total {
        if k > 0 {
            for i in 0..n {
                h[i] = p.variance.omega[i] + p.variance.kappa[i] * prev_r[i] * prev_r[i] + p.variance.lambda[i] * h[i];
            }
            let mut next = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = (1.0 - a - b) * s[i * n + j] + a * prev_eps[i] * prev_eps[j] + b * q[i * n + j];
                    next[i * n + j] = v;
                    next[j * n + i] = v;
                }
            }
            q = next;
        }
        let rmat = normalize_q(&q, n)?;
        chol.copy_from_slice(&rmat);
        linalg::cholesky_in_place(&mut chol, n)
            .ok_or_else(|| Error::Internal(format!("Cholesky of R_t failed at simulated week {k}")))?;
        let z = draw_unit_t(&mut rng, p.correlation.nu);
        let mut eps = [0.0; N_SERIES];
        for i in 0..n {
            eps[i] = (0..=i).map(|j| chol[i * n + j] * z[j]).sum();
            prev_r[i] = h[i].sqrt() * eps[i];
            r_all[i].push(prev_r[i]);
        }
        prev_eps = eps;
        let bk = match spec.covariate {
            CovariatePolicy::Constant(c) => c,
            CovariatePolicy::Ar1 { mean, persistence, sd } => {
                let e: f64 = StandardNormal.sample(&mut rng);
                mean + persistence * (b_prev - mean) + sd * e
            }
        };
        b_prev = bk;
        b_all.push(bk);
        h_all.push(h);
        eps_all.push(eps);
        q_all.push(q.clone());
        rmat_all.push(rmat);
    }

    // Levels start from the stationary mean at the covariate's level.
    let x0: [f64; N_SERIES] = std::array::from_fn(|i| {
        let mut m = p.mean.mu[i];
        if i == COVARIATE_EQUATION {
            m += p.mean.tau * spec.covariate.level();
        }
        m / (1.0 - p.mean.phi[i])
    });
    let shocks: Vec<Vec<f64>> = r_all.iter().map(|ri| ri[1..].to_vec()).collect();
    let levels = mean_unfilter(&shocks, &p.mean, x0, &b_all)?;

    let keep = spec.burn_in..total;
    let weeks = keep
        .clone()
        .enumerate()
        .map(|(w, k)| SpreadWeek {
            week_end: spec.start + Days::new(7 * w as u64),
            x: levels[k],
            b: b_all[k],
        })
        .collect();
    let panel = SpreadPanel::new(weeks)?;

    let inner = (spec.burn_in + 1)..total;
    Ok(Simulation {
        panel,
        innovations: (0..n).map(|i| r_all[i][inner.clone()].to_vec()).collect(),
        variances: (0..n).map(|i| inner.clone().map(|k| h_all[k][i]).collect()).collect(),
        standardized: (0..n).map(|i| inner.clone().map(|k| eps_all[k][i]).collect()).collect(),
        q: q_all[inner.clone()].to_vec(),
        r: rmat_all[inner].to_vec(),
    })
}

/// Seed from which the fixture search starts.
pub const FIXTURE_SEED: u64 = 20_110_617;
pub const FIXTURE_FIRST_DAY: (i32, u32, u32) = (2011, 6, 17);
pub const FIXTURE_LAST_DAY: (i32, u32, u32) = (2016, 4, 8);
/// Keep every daily rate at least this far above zero.
const FIXTURE_FLOOR: f64 = 0.05;
const FIXTURE_JITTER: f64 = 0.02;
/// Range the fixture's true co-movement correlations must stay in.
pub const FIXTURE_BAND: (f64, f64) = (0.10, 0.65);

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureInfo {
    pub seed: u64,
    pub weeks: usize,
    pub days: usize,
}

/// Weekdays between the fixture's first and last day, grouped by ISO week.
pub fn fixture_calendar() -> Vec<Vec<NaiveDate>> {
    let (y0, m0, d0) = FIXTURE_FIRST_DAY;
    let (y1, m1, d1) = FIXTURE_LAST_DAY;
    let first = NaiveDate::from_ymd_opt(y0, m0, d0).expect("valid date");
    let last = NaiveDate::from_ymd_opt(y1, m1, d1).expect("valid date");
    let mut weeks: Vec<Vec<NaiveDate>> = Vec::new();
    let mut day = first;
    while day <= last {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            match weeks.last_mut() {
                Some(w) if w[0].iso_week() == day.iso_week() => w.push(day),
                _ => weeks.push(vec![day]),
            }
        }
        day = day + Days::new(1);
    }
    weeks
}

/// Renders the fixture's daily CSV text and the seed that produced it.
///
/// Weekly values come from [`SystemParams::reference`]; each weekly rate is
/// spread over the week's weekdays with zero-sum seeded jitter, so weekly
/// means reproduce the simulated values. The first seed at or after
/// [`FIXTURE_SEED`] whose rates all stay above a small floor and whose
/// simulated co-movement paths stay inside [`FIXTURE_BAND`] is used.
pub fn fixture_csv() -> Result<(String, FixtureInfo)> {
    let calendar = fixture_calendar();
    for seed in FIXTURE_SEED..FIXTURE_SEED + 10_000 {
        let mut spec = SimSpec::new(SystemParams::reference(), calendar.len(), seed);
        spec.start = calendar[0][calendar[0].len() - 1];
        let sim = simulate(&spec)?;
        let in_band = sim.r.iter().all(|r| {
            COMOVEMENT_PAIRS
                .iter()
                .all(|&(i, j)| (FIXTURE_BAND.0..=FIXTURE_BAND.1).contains(&r[i * N_SERIES + j]))
        });
        if !in_band {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f1c7);
        let mut text = String::from("date,shibor_1m,ir_1m,er_1m,cp_1m,pfb_1m,tb_1m\n");
        let mut ok = true;
        let mut days = 0;
        'weeks: for (week, dates) in sim.panel.weeks().iter().zip(&calendar) {
            let weekly: [f64; 6] = std::array::from_fn(|k| if k < N_SERIES { week.x[k] + week.b } else { week.b });
            let mut jitter = vec![[0.0; 6]; dates.len()];
            #[allow(clippy::needless_range_loop)]
            for k in 0..6 {
                let draws: Vec<f64> = (0..dates.len()).map(|_| rng.random_range(-FIXTURE_JITTER..FIXTURE_JITTER)).collect();
                let m = draws.iter().sum::<f64>() / draws.len() as f64;
                for (d, v) in draws.iter().enumerate() {
                    jitter[d][k] = v - m;
                }
            }
            for (d, date) in dates.iter().enumerate() {
                let _ = write!(text, "{}", date.format("%Y-%m-%d"));
                for k in 0..6 {
                    let v = weekly[k] + jitter[d][k];
                    if !(v >= FIXTURE_FLOOR) {
                        ok = false;
                        break 'weeks;
                    }
                    let _ = write!(text, ",{v:.6}");
                }
                text.push('\n');
                days += 1;
            }
        }
        if ok {
            return Ok((
                text,
                FixtureInfo {
                    seed,
                    weeks: calendar.len(),
                    days,
                },
            ));
        }
    }
    Err(Error::Internal("no fixture seed meets the rate floor and correlation band".into()))
}

/// Writes the fixture's daily CSV to `path`.
pub fn make_fixture(path: impl AsRef<Path>) -> Result<FixtureInfo> {
    let path = path.as_ref();
    let (text, info) = fixture_csv()?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_panel() {
        let spec = SimSpec::new(SystemParams::reference(), 50, 9);
        assert_eq!(simulate(&spec).unwrap().panel, simulate(&spec).unwrap().panel);
        let mut other = spec.clone();
        other.seed = 10;
        assert_ne!(simulate(&other).unwrap().panel, simulate(&spec).unwrap().panel);
    }

    #[test]
    fn constant_covariate_policy() {
        let mut spec = SimSpec::new(SystemParams::reference(), 20, 1);
        spec.covariate = CovariatePolicy::Constant(2.5);
        assert!(simulate(&spec).unwrap().panel.weeks().iter().all(|w| w.b == 2.5));
    }

    #[test]
    fn rejects_short_spec() {
        assert!(simulate(&SimSpec::new(SystemParams::reference(), 5, 1)).is_err());
    }

    #[test]
    fn fixture_calendar_spans_252_weeks() {
        let cal = fixture_calendar();
        assert_eq!(cal.len(), 252);
        assert_eq!(cal[0].len(), 1); // starts on a Friday
        assert!(cal.iter().all(|w| !w.is_empty() && w.len() <= 5));
    }
}
