//! The demo's computations, independent of the JavaScript boundary.

use comove::correlation::COMOVEMENT_PAIRS;
use comove::data::N_SERIES;
use comove::likelihood::SystemParams;
use comove::simulation::{draw_unit_t, simulate, SimSpec};
use comove::stationarity::{pretest, UnitRootReport};
use comove::variance::SeriesGarch;
use comove::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Longest simulation the page may request.
pub const MAX_WEEKS: usize = 5000;

fn check_length(weeks: usize, min: usize) -> Result<()> {
    if (min..=MAX_WEEKS).contains(&weeks) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("length must be between {min} and {MAX_WEEKS}, got {weeks}")))
    }
}

/// True co-movement correlations of a simulation from the reference
/// parameters with the given `alpha`, `beta` and `nu`, row-major `weeks x 6`.
pub fn comovement_paths(alpha: f64, beta: f64, nu: f64, weeks: usize, seed: u64) -> Result<Vec<f64>> {
    check_length(weeks, 10)?;
    let mut params = SystemParams::reference();
    params.correlation.alpha = alpha;
    params.correlation.beta = beta;
    params.correlation.nu = nu;
    let sim = simulate(&SimSpec::new(params, weeks + 1, seed))?;
    Ok(sim
        .r
        .iter()
        .flat_map(|r| COMOVEMENT_PAIRS.map(|(i, j)| r[i * N_SERIES + j]))
        .collect())
}

pub struct GarchPath {
    pub innovations: Vec<f64>,
    pub variances: Vec<f64>,
}

/// A Gaussian GARCH(1,1) path started at the unconditional variance.
pub fn garch_path(omega: f64, kappa: f64, lambda: f64, weeks: usize, seed: u64) -> Result<GarchPath> {
    check_length(weeks, 2)?;
    let g = SeriesGarch { omega, kappa, lambda };
    g.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = g.unconditional_variance();
    let mut innovations = Vec::with_capacity(weeks);
    let mut variances = Vec::with_capacity(weeks);
    for _ in 0..weeks {
        let z: f64 = StandardNormal.sample(&mut rng);
        let r = h.sqrt() * z;
        innovations.push(r);
        variances.push(h);
        h = omega + kappa * r * r + lambda * h;
    }
    // The library filter must reproduce the generated variances.
    debug_assert!(g
        .filter(&innovations, variances[0])
        .iter()
        .zip(&variances)
        .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs()));
    Ok(GarchPath { innovations, variances })
}

pub struct UnitRootOutcome {
    pub series: Vec<f64>,
    pub adf: UnitRootReport,
    pub pp: UnitRootReport,
}

/// Student-t(8) driven AR(1) from zero, then ADF and PP with automatic lags.
pub fn unit_root(phi: f64, length: usize, seed: u64) -> Result<UnitRootOutcome> {
    check_length(length, 20)?;
    if phi.is_nan() || phi.abs() > 1.0 {
        return Err(Error::InvalidParams(format!("phi must lie in [-1, 1], got {phi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(length);
    let mut prev = 0.0;
    for _ in 0..length {
        prev = phi * prev + draw_unit_t(&mut rng, 8.0)[0];
        y.push(prev);
    }
    let [adf, pp] = pretest("simulated", &y)?;
    Ok(UnitRootOutcome { series: y, adf, pp })
}
