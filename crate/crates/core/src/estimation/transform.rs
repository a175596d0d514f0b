//! Bijection between the open parameter set and `R^29`.
//!
//! Coordinate layout (natural and unconstrained share it):
//! `mu[0..5] phi[5..10] tau[10] omega[11..16] kappa[16..21] lambda[21..26]
//! alpha[26] beta[27] nu[28]`.
//!
//! * `phi = tanh(theta)`
//! * `omega = exp(theta)`, `nu = 2 + exp(theta)`
//! * `(kappa, lambda) = (e^a, e^b) / (1 + e^a + e^b)` and the same for
//!   `(alpha, beta)`, which maps onto the open simplex `x, y > 0, x + y < 1`.

use crate::correlation::DccParams;
use crate::data::N_SERIES;
use crate::error::{Error, Result};
use crate::likelihood::SystemParams;
use crate::mean::MeanParams;
use crate::variance::GarchParams;

pub const N_FREE: usize = 29;

const MU: usize = 0;
const PHI: usize = 5;
const TAU: usize = 10;
const OMEGA: usize = 11;
const KAPPA: usize = 16;
const LAMBDA: usize = 21;
const ALPHA: usize = 26;
const BETA: usize = 27;
const NU: usize = 28;

/// Names of the free parameters in layout order, e.g. `mu.1`, `alpha`.
pub fn free_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_FREE);
    for base in ["mu", "phi"] {
        names.extend((1..=N_SERIES).map(|i| format!("{base}.{i}")));
    }
    names.push("tau".into());
    for base in ["omega", "kappa", "lambda"] {
        names.extend((1..=N_SERIES).map(|i| format!("{base}.{i}")));
    }
    names.extend(["alpha".into(), "beta".into(), "nu".into()]);
    names
}

/// Natural-scale free parameters in layout order.
pub fn free_values(p: &SystemParams) -> Vec<f64> {
    let mut v = Vec::with_capacity(N_FREE);
    v.extend(p.mean.mu);
    v.extend(p.mean.phi);
    v.push(p.mean.tau);
    v.extend(p.variance.omega);
    v.extend(p.variance.kappa);
    v.extend(p.variance.lambda);
    v.extend([p.correlation.alpha, p.correlation.beta, p.correlation.nu]);
    v
}

/// Rebuilds a parameter set from natural-scale free values and a target `S`.
pub fn from_free_values(v: &[f64], target: &[f64]) -> SystemParams {
    let arr = |start: usize| -> [f64; N_SERIES] { std::array::from_fn(|i| v[start + i]) };
    SystemParams {
        mean: MeanParams {
            mu: arr(MU),
            phi: arr(PHI),
            tau: v[TAU],
        },
        variance: GarchParams {
            omega: arr(OMEGA),
            kappa: arr(KAPPA),
            lambda: arr(LAMBDA),
        },
        correlation: DccParams {
            alpha: v[ALPHA],
            beta: v[BETA],
            target: target.to_vec(),
            n: N_SERIES,
            nu: v[NU],
        },
    }
}

fn simplex_forward(x: f64, y: f64, what: &str) -> Result<(f64, f64)> {
    let rest = 1.0 - x - y;
    if !(x > 0.0 && y > 0.0 && rest > 0.0) {
        return Err(Error::InvalidParams(format!(
            "{what} = ({x}, {y}) is not in the open simplex"
        )));
    }
    Ok(((x / rest).ln(), (y / rest).ln()))
}

fn simplex_inverse(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b).max(0.0);
    let (ea, eb, e0) = ((a - m).exp(), (b - m).exp(), (-m).exp());
    let d = e0 + ea + eb;
    (ea / d, eb / d)
}

/// Maps valid parameters to unconstrained coordinates.
pub fn forward(p: &SystemParams) -> Result<Vec<f64>> {
    let mut theta = vec![0.0; N_FREE];
    for i in 0..N_SERIES {
        theta[MU + i] = p.mean.mu[i];
        let phi = p.mean.phi[i];
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidParams(format!("phi.{} = {phi} outside (-1, 1)", i + 1)));
        }
        theta[PHI + i] = phi.atanh();
        let omega = p.variance.omega[i];
        if !(omega > 0.0) {
            return Err(Error::InvalidParams(format!("omega.{} = {omega} must be positive", i + 1)));
        }
        theta[OMEGA + i] = omega.ln();
        let (a, b) = simplex_forward(p.variance.kappa[i], p.variance.lambda[i], &format!("(kappa.{0}, lambda.{0})", i + 1))?;
        theta[KAPPA + i] = a;
        theta[LAMBDA + i] = b;
    }
    theta[TAU] = p.mean.tau;
    let (a, b) = simplex_forward(p.correlation.alpha, p.correlation.beta, "(alpha, beta)")?;
    theta[ALPHA] = a;
    theta[BETA] = b;
    if !(p.correlation.nu > 2.0) {
        return Err(Error::InvalidParams(format!("nu = {} must exceed 2", p.correlation.nu)));
    }
    theta[NU] = (p.correlation.nu - 2.0).ln();
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("parameters map to a non-finite coordinate".into()));
    }
    Ok(theta)
}

/// Natural-scale free values of `theta`.
pub fn inverse_values(theta: &[f64]) -> Vec<f64> {
    let mut v = theta.to_vec();
    for i in 0..N_SERIES {
        v[PHI + i] = theta[PHI + i].tanh();
        v[OMEGA + i] = theta[OMEGA + i].exp();
        let (k, l) = simplex_inverse(theta[KAPPA + i], theta[LAMBDA + i]);
        v[KAPPA + i] = k;
        v[LAMBDA + i] = l;
    }
    let (a, b) = simplex_inverse(theta[ALPHA], theta[BETA]);
    v[ALPHA] = a;
    v[BETA] = b;
    v[NU] = 2.0 + theta[NU].exp();
    v
}

pub fn inverse(theta: &[f64], target: &[f64]) -> SystemParams {
    from_free_values(&inverse_values(theta), target)
}

/// Jacobian `d natural / d theta`, row-major `N_FREE x N_FREE`.
pub fn jacobian(theta: &[f64]) -> Vec<f64> {
    let v = inverse_values(theta);
    let n = N_FREE;
    let mut j = vec![0.0; n * n];
    for i in 0..N_SERIES {
        j[(MU + i) * n + MU + i] = 1.0;
        let phi = v[PHI + i];
        j[(PHI + i) * n + PHI + i] = 1.0 - phi * phi;
        j[(OMEGA + i) * n + OMEGA + i] = v[OMEGA + i];
        simplex_block(&mut j, n, KAPPA + i, LAMBDA + i, v[KAPPA + i], v[LAMBDA + i]);
    }
    j[TAU * n + TAU] = 1.0;
    simplex_block(&mut j, n, ALPHA, BETA, v[ALPHA], v[BETA]);
    j[NU * n + NU] = v[NU] - 2.0;
    j
}

fn simplex_block(j: &mut [f64], n: usize, ia: usize, ib: usize, x: f64, y: f64) {
    j[ia * n + ia] = x * (1.0 - x);
    j[ia * n + ib] = -x * y;
    j[ib * n + ia] = -x * y;
    j[ib * n + ib] = y * (1.0 - y);
}
