//! DCC(1,1) pseudo-correlation recursion and the six named co-movements.

use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct DccParams {
    pub alpha: f64,
    pub beta: f64,
    /// Row-major `n*n` unconditional correlation target.
    pub target: Vec<f64>,
    pub n: usize,
    /// Student-t degrees of freedom.
    pub nu: f64,
}

impl DccParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "need alpha, beta >= 0 and alpha + beta < 1 (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if !(self.nu > 2.0) || self.nu.is_nan() {
            return Err(Error::InvalidParams(format!("nu must exceed 2, got {}", self.nu)));
        }
        linalg::validate_correlation(&self.target, self.n)
    }

    pub fn target_entry(&self, i: usize, j: usize) -> f64 {
        self.target[i * self.n + j]
    }
}

/// Starting pseudo-correlation for the first innovation week.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum QInit {
    /// `Q_1 = S`.
    #[default]
    Target,
    Fixed(Vec<f64>),
}

/// `Q_t` and `R_t` for each innovation week, stored row-major back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPath {
    n: usize,
    q: Vec<f64>,
    r: Vec<f64>,
}

impl CorrelationPath {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.q.len() / (self.n * self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q(&self, t: usize) -> &[f64] {
        let m = self.n * self.n;
        &self.q[t * m..(t + 1) * m]
    }

    pub fn r(&self, t: usize) -> &[f64] {
        let m = self.n * self.n;
        &self.r[t * m..(t + 1) * m]
    }

    pub fn rho(&self, t: usize, i: usize, j: usize) -> f64 {
        self.r(t)[i * self.n + j]
    }
}

pub fn dcc_filter(eps: &[Vec<f64>], params: &DccParams) -> Result<CorrelationPath> {
    dcc_filter_with(eps, params, &QInit::Target)
}

/// Runs `Q_t = (1-a-b) S + a e_{t-1} e_{t-1}' + b Q_{t-1}` and normalizes each
/// `Q_t` to a correlation matrix.
pub fn dcc_filter_with(eps: &[Vec<f64>], params: &DccParams, init: &QInit) -> Result<CorrelationPath> {
    params.validate()?;
    let n = params.n;
    if eps.len() != n {
        return Err(Error::InvalidParams(format!(
            "expected {n} standardized series, got {}",
            eps.len()
        )));
    }
    let len = eps[0].len();
    if eps.iter().any(|e| e.len() != len) {
        return Err(Error::InvalidParams("standardized series lengths disagree".into()));
    }
    let m = n * n;
    let mut q = vec![0.0; len * m];
    let mut r = vec![0.0; len * m];
    if len == 0 {
        return Ok(CorrelationPath { n, q, r });
    }
    match init {
        QInit::Target => q[..m].copy_from_slice(&params.target),
        QInit::Fixed(q1) => {
            if q1.len() != m {
                return Err(Error::InvalidParams("initial Q has the wrong size".into()));
            }
            q[..m].copy_from_slice(q1);
        }
    }
    let (a, b) = (params.alpha, params.beta);
    let c = 1.0 - a - b;
    let s = &params.target;
    for t in 1..len {
        let (done, rest) = q.split_at_mut(t * m);
        let prev = &done[(t - 1) * m..];
        let cur = &mut rest[..m];
        for i in 0..n {
            let ei = eps[i][t - 1];
            for j in i..n {
                let v = c * s[i * n + j] + a * ei * eps[j][t - 1] + b * prev[i * n + j];
                cur[i * n + j] = v;
                cur[j * n + i] = v;
            }
        }
    }
    for t in 0..len {
        normalize_into(&q[t * m..(t + 1) * m], n, &mut r[t * m..(t + 1) * m], t)?;
    }
    Ok(CorrelationPath { n, q, r })
}

/// `R = diag(Q)^{-1/2} Q diag(Q)^{-1/2}` with an exact unit diagonal.
pub fn normalize_q(q: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut r = vec![0.0; n * n];
    normalize_into(q, n, &mut r, 0)?;
    Ok(r)
}

fn normalize_into(q: &[f64], n: usize, r: &mut [f64], week: usize) -> Result<()> {
    for i in 0..n {
        let d = q[i * n + i];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite(format!(
                "Q diagonal entry {} is {d} at week {week}",
                i + 1
            )));
        }
    }
    for i in 0..n {
        r[i * n + i] = 1.0;
        for j in 0..i {
            let v = (q[i * n + j] / (q[i * n + i] * q[j * n + j]).sqrt()).clamp(-1.0, 1.0);
            r[i * n + j] = v;
            r[j * n + i] = v;
        }
    }
    Ok(())
}

/// Names of the six co-movements in output order.
pub const COMOVEMENT_LABELS: [&str; 6] = ["rho_1a", "rho_1b", "rho_2a", "rho_2b", "rho_2c", "rho_2d"];

/// Zero-based `(row, col)` of each co-movement in the 5x5 correlation matrix:
/// 1a Shibor/ER, 1b IR/ER, 2a Shibor/PFB, 2b Shibor/CP, 2c IR/PFB, 2d IR/CP.
pub const COMOVEMENT_PAIRS: [(usize, usize); 6] = [(0, 2), (1, 2), (0, 4), (0, 3), (1, 4), (1, 3)];

#[derive(Debug, Clone, PartialEq)]
pub struct ComovementSeries {
    pub dates: Vec<NaiveDate>,
    pub rho: Vec<[f64; 6]>,
}

impl ComovementSeries {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rho.iter().map(|r| r[k]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("week_end");
        for l in COMOVEMENT_LABELS {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for (d, row) in self.dates.iter().zip(&self.rho) {
            let _ = write!(s, "{}", d.format("%Y-%m-%d"));
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let expected = format!("week_end,{}", COMOVEMENT_LABELS.join(","));
        if header.trim() != expected {
            return Err(Error::Config(format!("co-movement CSV header must be `{expected}`")));
        }
        let mut dates = Vec::new();
        let mut rho = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad = || Error::Config(format!("co-movement CSV line {}: malformed", k + 2));
            if fields.len() != 7 {
                return Err(bad());
            }
            dates.push(NaiveDate::parse_from_str(fields[0].trim(), "%Y-%m-%d").map_err(|_| bad())?);
            let mut row = [0.0; 6];
            for (slot, f) in row.iter_mut().zip(&fields[1..]) {
                *slot = f.trim().parse().map_err(|_| bad())?;
            }
            rho.push(row);
        }
        Ok(Self { dates, rho })
    }
}

/// Picks the six named entries of each `R_t`. `dates[t]` labels `R_t`.
pub fn extract_comovements(path: &CorrelationPath, dates: &[NaiveDate]) -> Result<ComovementSeries> {
    if path.n() != 5 {
        return Err(Error::InvalidParams(format!(
            "co-movements need a 5-series path, got {}",
            path.n()
        )));
    }
    if path.len() != dates.len() {
        return Err(Error::InvalidParams(format!(
            "correlation path has {} weeks but {} dates were given",
            path.len(),
            dates.len()
        )));
    }
    let rho = (0..path.len())
        .map(|t| COMOVEMENT_PAIRS.map(|(i, j)| path.rho(t, i, j)))
        .collect();
    Ok(ComovementSeries {
        dates: dates.to_vec(),
        rho,
    })
}

/// Full lower triangle (15 entries for 5 series, diagonal included) per week.
pub fn lower_triangle_csv(path: &CorrelationPath, dates: &[NaiveDate]) -> String {
    let n = path.n();
    let mut s = String::from("week_end");
    for i in 0..n {
        for j in 0..=i {
            let _ = write!(s, ",r_{}_{}", i + 1, j + 1);
        }
    }
    s.push('\n');
    for (t, d) in dates.iter().enumerate().take(path.len()) {
        let _ = write!(s, "{}", d.format("%Y-%m-%d"));
        for i in 0..n {
            for j in 0..=i {
                let _ = write!(s, ",{}", path.rho(t, i, j));
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn params2(rho: f64, alpha: f64, beta: f64) -> DccParams {
        DccParams {
            alpha,
            beta,
            target: vec![1.0, rho, rho, 1.0],
            n: 2,
            nu: 8.0,
        }
    }

    #[test]
    fn static_correlation_when_alpha_beta_zero() {
        let eps = vec![vec![1.0, -2.0, 0.5, 3.0], vec![0.2, 1.0, -1.5, 0.1]];
        let p = params2(0.3, 0.0, 0.0);
        let path = dcc_filter(&eps, &p).unwrap();
        for t in 0..4 {
            assert_eq!(path.r(t), p.target.as_slice());
        }
    }

    #[test]
    fn single_step_at_reference_point() {
        let eps = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let path = dcc_filter(&eps, &params2(0.3, 0.033, 0.945)).unwrap();
        let q = path.q(1);
        assert!((q[1] - 0.2571).abs() < 1e-12);
        assert!((q[0] - 1.0).abs() < 1e-12 && (q[3] - 1.0).abs() < 1e-12);
        assert!((path.rho(1, 0, 1) - 0.2571).abs() < 1e-12);
    }

    #[test]
    fn reverts_to_target_without_news() {
        let eps = vec![vec![0.0; 200], vec![0.0; 200]];
        let p = params2(0.4, 0.1, 0.85);
        let q1 = vec![2.0, -0.5, -0.5, 3.0];
        let path = dcc_filter_with(&eps, &p, &QInit::Fixed(q1.clone())).unwrap();
        // Fixed point Q* = (1 - alpha - beta) S / (1 - beta); Q_t - Q* = beta^t (Q_1 - Q*).
        let fixed: Vec<f64> = p.target.iter().map(|s| 0.05 * s / 0.15).collect();
        for t in [0usize, 1, 10, 100, 199] {
            for k in 0..4 {
                let expect = fixed[k] + 0.85f64.powi(t as i32) * (q1[k] - fixed[k]);
                assert!((path.q(t)[k] - expect).abs() < 1e-12);
            }
        }
        // Normalized, that fixed point is the target correlation.
        assert!((path.rho(199, 0, 1) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_pd_target() {
        let eps = vec![vec![0.0; 3]; 3];
        let p = DccParams {
            alpha: 0.05,
            beta: 0.9,
            target: vec![1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
            n: 3,
            nu: 8.0,
        };
        assert!(matches!(dcc_filter(&eps, &p), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn normalize_cases() {
        let r = normalize_q(&[4.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(r[1], 0.5);
        let c = [1.0, 0.3, 0.3, 1.0];
        assert_eq!(normalize_q(&c, 2).unwrap(), c.to_vec());
        let scaled: Vec<f64> = [4.0, 1.0, 1.0, 1.0].iter().map(|v| v * 7.5).collect();
        assert!((normalize_q(&scaled, 2).unwrap()[1] - 0.5).abs() < 1e-15);
        assert!(normalize_q(&[0.0, 0.0, 0.0, 1.0], 2).is_err());
    }

    fn identity_path(len: usize, tweak: Option<(usize, usize, f64)>) -> CorrelationPath {
        let mut r = Vec::new();
        for _ in 0..len {
            let mut m = vec![0.0; 25];
            for i in 0..5 {
                m[i * 5 + i] = 1.0;
            }
            if let Some((i, j, v)) = tweak {
                m[i * 5 + j] = v;
                m[j * 5 + i] = v;
            }
            r.extend(m);
        }
        CorrelationPath { n: 5, q: r.clone(), r }
    }

    fn dates(len: usize) -> Vec<NaiveDate> {
        let d0 = NaiveDate::from_ymd_opt(2014, 1, 3).unwrap();
        (0..len).map(|k| d0 + Days::new(7 * k as u64)).collect()
    }

    #[test]
    fn comovement_selection() {
        let c = extract_comovements(&identity_path(3, None), &dates(3)).unwrap();
        assert!(c.rho.iter().all(|row| row.iter().all(|&v| v == 0.0)));

        let path = identity_path(2, Some((0, 2, 0.6)));
        let c = extract_comovements(&path, &dates(2)).unwrap();
        assert_eq!(c.rho[0], [0.6, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(path.rho(0, 2, 0), c.rho[0][0]);

        assert!(extract_comovements(&path, &dates(3)).is_err());
    }

    #[test]
    fn comovement_csv_round_trip() {
        let c = extract_comovements(&identity_path(2, Some((1, 3, -0.25))), &dates(2)).unwrap();
        let text = c.to_csv();
        assert!(text.starts_with("week_end,rho_1a,rho_1b,rho_2a,rho_2b,rho_2c,rho_2d\n"));
        assert_eq!(ComovementSeries::from_csv(&text).unwrap(), c);
        let tri = lower_triangle_csv(&identity_path(1, None), &dates(1));
        let header = tri.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 16);
    }

    fn random_corr<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
        // Normalized Gram matrix of random vectors plus a ridge.
        let k = n + 2;
        let v: Vec<f64> = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = (0..k).map(|l| v[i * k + l] * v[j * k + l]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
            }
        }
        normalize_q(&g, n).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn elementwise_form_matches(seed in 0u64..10_000, a in 0.0f64..0.3, b in 0.0f64..0.69) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = random_corr(&mut rng, 5);
            let eps: Vec<Vec<f64>> = (0..5).map(|_| (0..50).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let p = DccParams { alpha: a, beta: b, target: s.clone(), n: 5, nu: 6.0 };
            let path = dcc_filter(&eps, &p).unwrap();
            for t in 1..50 {
                for i in 0..5 {
                    for j in 0..5 {
                        let rb = s[i * 5 + j];
                        let e = rb + a * (eps[i][t - 1] * eps[j][t - 1] - rb) + b * (path.q(t - 1)[i * 5 + j] - rb);
                        prop_assert!((e - path.q(t)[i * 5 + j]).abs() < 1e-14 * e.abs().max(1.0) * 4.0);
                    }
                }
                let r = path.r(t);
                for i in 0..5 {
                    prop_assert_eq!(r[i * 5 + i], 1.0);
                    for j in 0..5 {
                        prop_assert!(r[i * 5 + j].abs() <= 1.0);
                        prop_assert_eq!(r[i * 5 + j], r[j * 5 + i]);
                    }
                }
                prop_assert!(linalg::min_eigenvalue(r, 5) >= -1e-10);
            }
        }
    }
}
