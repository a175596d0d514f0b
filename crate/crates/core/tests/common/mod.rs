//! Shared helpers for the integration tests, including a brute-force
//! reference likelihood that shares no code with the library.

#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use comove::correlation::DccParams;
use comove::data::{SpreadPanel, SpreadWeek};
use comove::likelihood::SystemParams;
use comove::mean::MeanParams;
use comove::variance::GarchParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Lanczos log-gamma (g = 7, nine coefficients), for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Solves `m z = v` and returns `(z, ln|det m|)` by Gaussian elimination
/// with partial pivoting.
pub fn solve_and_log_det(m: &[Vec<f64>], v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut b = v.to_vec();
    let mut log_det = 0.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        log_det += p.abs().ln();
        for row in (col + 1)..n {
            let f = a[row][col] / p;
            #[allow(clippy::needless_range_loop)]
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[i][k] * z[k];
        }
        z[i] = s / a[i][i];
    }
    (z, log_det)
}

/// Reference log-likelihood: every recursion written out week by week,
/// with the full conditional covariance `H_t = D_t R_t D_t`.
///
/// `x[t][i]` are the spreads, `b[t]` the covariate. The first week seeds the
/// AR(1) lag; `h` starts at the population variance of each innovation
/// series and `Q` at the target.
pub fn reference_log_likelihood(x: &[[f64; 5]], b: &[f64], p: &SystemParams) -> f64 {
    let n = 5;
    let weeks = x.len();
    let m = &p.mean;
    let g = &p.variance;
    let c = &p.correlation;

    let mut r = vec![[0.0; 5]; weeks - 1];
    for t in 1..weeks {
        for i in 0..n {
            let mut fitted = m.mu[i] + m.phi[i] * x[t - 1][i];
            if i == 4 {
                fitted += m.tau * b[t];
            }
            r[t - 1][i] = x[t][i] - fitted;
        }
    }
    let len = r.len();

    let mut h = vec![[0.0; 5]; len];
    for i in 0..n {
        let avg: f64 = r.iter().map(|row| row[i]).sum::<f64>() / len as f64;
        h[0][i] = r.iter().map(|row| (row[i] - avg).powi(2)).sum::<f64>() / len as f64;
    }
    for t in 1..len {
        for i in 0..n {
            h[t][i] = g.omega[i] + g.kappa[i] * r[t - 1][i] * r[t - 1][i] + g.lambda[i] * h[t - 1][i];
        }
    }

    let s = |i: usize, j: usize| c.target[i * n + j];
    let mut q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| s(i, j)).collect()).collect();
    let nu = c.nu;
    let mut total = 0.0;
    for t in 0..len {
        if t > 0 {
            let e: Vec<f64> = (0..n).map(|i| r[t - 1][i] / h[t - 1][i].sqrt()).collect();
            let prev = q.clone();
            for i in 0..n {
                for j in 0..n {
                    q[i][j] = (1.0 - c.alpha - c.beta) * s(i, j) + c.alpha * e[i] * e[j] + c.beta * prev[i][j];
                }
            }
        }
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let rho = q[i][j] / (q[i][i] * q[j][j]).sqrt();
                        rho * (h[t][i] * h[t][j]).sqrt()
                    })
                    .collect()
            })
            .collect();
        let (z, log_det) = solve_and_log_det(&cov, &r[t]);
        let quad: f64 = z.iter().zip(&r[t]).map(|(a, b)| a * b).sum();
        let nf = n as f64;
        total += ln_gamma((nu + nf) / 2.0) - ln_gamma(nu / 2.0) - nf / 2.0 * ((nu - 2.0) * std::f64::consts::PI).ln()
            - 0.5 * log_det
            - (nu + nf) / 2.0 * (1.0 + quad / (nu - 2.0)).ln();
    }
    total
}

pub fn panel_from_rows(x: &[[f64; 5]], b: &[f64]) -> SpreadPanel {
    let start = NaiveDate::from_ymd_opt(2011, 6, 17).unwrap();
    let weeks = x
        .iter()
        .zip(b)
        .enumerate()
        .map(|(t, (x, b))| SpreadWeek {
            week_end: start.checked_add_days(Days::new(7 * t as u64)).unwrap(),
            x: *x,
            b: *b,
        })
        .collect();
    SpreadPanel::new(weeks).unwrap()
}

pub fn rows_of(panel: &SpreadPanel) -> (Vec<[f64; 5]>, Vec<f64>) {
    (panel.weeks().iter().map(|w| w.x).collect(), panel.weeks().iter().map(|w| w.b).collect())
}

/// A random correlation matrix `C C'` normalized, with `C` entries in `[-1, 1]`.
pub fn random_correlation(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let c: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (0..n).map(|k| c[i * n + k] * c[j * n + k]).sum::<f64>() + if i == j { 0.2 } else { 0.0 };
        }
    }
    let d: Vec<f64> = (0..n).map(|i| m[i * n + i].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] /= d[i] * d[j];
        }
        m[i * n + i] = 1.0;
    }
    m
}

/// Random valid parameters away from the constraint boundaries.
pub fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let mut kappa = [0.0; 5];
    let mut lambda = [0.0; 5];
    for i in 0..5 {
        kappa[i] = rng.random_range(0.01..0.4);
        lambda[i] = rng.random_range(0.0..(0.98 - kappa[i]));
    }
    let alpha = rng.random_range(0.0..0.2);
    let beta = rng.random_range(0.0..(0.97 - alpha));
    SystemParams {
        mean: MeanParams {
            mu: std::array::from_fn(|_| rng.random_range(-1.0..2.0)),
            phi: std::array::from_fn(|_| rng.random_range(-0.9..0.95)),
            tau: rng.random_range(-0.5..0.5),
        },
        variance: GarchParams {
            omega: std::array::from_fn(|_| rng.random_range(0.001..0.1)),
            kappa,
            lambda,
        },
        correlation: DccParams {
            alpha,
            beta,
            target: random_correlation(rng, 5),
            n: 5,
            nu: rng.random_range(3.0..30.0),
        },
    }
}
