//! BFGS with Armijo backtracking and central-difference gradients.

/// Objective value returned in place of NaN or an evaluation error.
pub const PENALTY: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the gradient infinity-norm.
    pub gradient_tolerance: f64,
    /// Stop when the accepted step is this small relative to `max(1, |x|)`.
    pub step_tolerance: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    /// Largest infinity-norm of a trial step.
    pub max_step: f64,
    /// Worker threads for gradient columns; 0 or 1 runs sequentially.
    pub threads: usize,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            gradient_tolerance: 1e-5,
            step_tolerance: 1e-9,
            fd_step: 1e-5,
            max_step: 2.0,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Objective value after each accepted step, starting with `f(x0)`.
    pub history: Vec<f64>,
}

impl Minimum {
    pub fn gradient_norm(&self) -> f64 {
        inf_norm(&self.gradient)
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn guarded<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_finite() {
        v.min(PENALTY)
    } else {
        PENALTY
    }
}

/// Central-difference gradient with step `h * max(1, |x_j|)`. A column
/// whose trial point on one side is penalized falls back to the one-sided
/// difference on the other side.
pub fn gradient<F>(f: &F, x: &[f64], h: f64, threads: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let f0 = std::sync::OnceLock::new();
    let column = |j: usize| {
        let step = h * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += step;
        xm[j] -= step;
        let (fp, fm) = (guarded(f, &xp), guarded(f, &xm));
        let center = || *f0.get_or_init(|| guarded(f, x));
        match (fp < PENALTY, fm < PENALTY) {
            (true, true) | (false, false) => (fp - fm) / (xp[j] - xm[j]),
            (true, false) => (fp - center()) / (xp[j] - x[j]),
            (false, true) => (center() - fm) / (x[j] - xm[j]),
        }
    };
    map_indices(x.len(), threads, column)
}

/// Evaluates `g(0..n)`, optionally on a bounded thread pool. Every index is
/// computed by the same code path, so results do not depend on `threads`.
pub fn map_indices<T, G>(n: usize, threads: usize, g: G) -> Vec<T>
where
    T: Send,
    G: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(|| (0..n).into_par_iter().map(&g).collect());
        }
    }
    let _ = threads;
    (0..n).map(g).collect()
}

pub fn minimize<F>(f: &F, x0: &[f64], config: &MinimizerConfig) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = guarded(f, &x);
    let mut g = gradient(f, &x, config.fd_step, config.threads);
    let mut hinv = identity(n);
    let mut history = vec![fx];
    let mut iterations = 0;
    let mut fresh_hessian = true;

    let termination = loop {
        if inf_norm(&g) <= config.gradient_tolerance {
            break Termination::GradientTolerance;
        }
        if iterations >= config.max_iterations {
            break Termination::MaxIterations;
        }

        let mut d = mat_vec(&hinv, &g, n);
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hinv = identity(n);
            fresh_hessian = true;
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let dn = inf_norm(&d);
        if dn > config.max_step {
            let s = config.max_step / dn;
            d.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let ft = guarded(f, &trial);
            if ft < PENALTY && ft <= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh_hessian {
                break Termination::LineSearchFailed;
            }
            hinv = identity(n);
            fresh_hessian = true;
            continue;
        };

        iterations += 1;
        let step_from_fresh = fresh_hessian;
        let g_new = gradient(f, &x_new, config.fd_step, config.threads);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let rel_step = s
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (si, xi)| m.max(si.abs() / xi.abs().max(1.0)));

        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh_hessian {
                // Shanno-Phua scaling of the initial inverse Hessian.
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut hinv, &s, &y, sy, n);
            fresh_hessian = false;
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);

        if rel_step < config.step_tolerance {
            if inf_norm(&g) <= config.gradient_tolerance {
                break Termination::GradientTolerance;
            }
            if step_from_fresh {
                break Termination::StepTolerance;
            }
            // A stalled quasi-Newton step: restart from a scaled identity.
            hinv = identity(n);
            fresh_hessian = true;
        }
    };

    let converged = inf_norm(&g) <= config.gradient_tolerance;
    Minimum {
        x,
        value: fx,
        gradient: g,
        iterations,
        converged,
        termination,
        history,
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - rho s y') H (I - rho y s') + rho s s'` with `rho = 1 / s'y`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
