//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function wraps a plain Rust function in [`demo`] so the
//! numerical work can be tested natively.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js_err(e: comove::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Simulated co-movement paths, row-major `weeks x 6` (1a, 1b, 2a..2d).
#[wasm_bindgen(js_name = simulateComovements)]
pub fn simulate_comovements(alpha: f64, beta: f64, nu: f64, weeks: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    demo::comovement_paths(alpha, beta, nu, weeks, u64::from(seed)).map_err(js_err)
}

/// Interleaved `[r_0, h_0, r_1, h_1, ...]` for one GARCH(1,1) series.
#[wasm_bindgen(js_name = garchPath)]
pub fn garch_path(omega: f64, kappa: f64, lambda: f64, weeks: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    let path = demo::garch_path(omega, kappa, lambda, weeks, u64::from(seed)).map_err(js_err)?;
    Ok(path.innovations.iter().zip(&path.variances).flat_map(|(r, h)| [*r, *h]).collect())
}

#[wasm_bindgen]
pub struct UnitRootDemo {
    inner: demo::UnitRootOutcome,
}

#[wasm_bindgen]
impl UnitRootDemo {
    #[wasm_bindgen(getter)]
    pub fn series(&self) -> Vec<f64> {
        self.inner.series.clone()
    }

    #[wasm_bindgen(getter, js_name = adfStatistic)]
    pub fn adf_statistic(&self) -> f64 {
        self.inner.adf.statistic
    }

    #[wasm_bindgen(getter, js_name = adfLags)]
    pub fn adf_lags(&self) -> usize {
        self.inner.adf.lags_or_bandwidth
    }

    #[wasm_bindgen(getter, js_name = adfCritical5)]
    pub fn adf_critical_5(&self) -> f64 {
        self.inner.adf.critical_values[1]
    }

    #[wasm_bindgen(getter, js_name = adfRejects)]
    pub fn adf_rejects(&self) -> bool {
        self.inner.adf.reject_at_5pct
    }

    #[wasm_bindgen(getter, js_name = ppStatistic)]
    pub fn pp_statistic(&self) -> f64 {
        self.inner.pp.statistic
    }

    #[wasm_bindgen(getter, js_name = ppBandwidth)]
    pub fn pp_bandwidth(&self) -> usize {
        self.inner.pp.lags_or_bandwidth
    }

    #[wasm_bindgen(getter, js_name = ppCritical5)]
    pub fn pp_critical_5(&self) -> f64 {
        self.inner.pp.critical_values[1]
    }

    #[wasm_bindgen(getter, js_name = ppRejects)]
    pub fn pp_rejects(&self) -> bool {
        self.inner.pp.reject_at_5pct
    }
}

/// ADF and PP tests on a simulated AR(1) series `y_t = phi y_{t-1} + e_t`.
#[wasm_bindgen(js_name = unitRootDemo)]
pub fn unit_root_demo(phi: f64, length: usize, seed: u32) -> Result<UnitRootDemo, JsError> {
    demo::unit_root(phi, length, u64::from(seed))
        .map(|inner| UnitRootDemo { inner })
        .map_err(js_err)
}
