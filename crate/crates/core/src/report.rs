//! Key-value serialization of fit reports, fit configs and simulation specs.
//!
//! Parameter keys: `mu.i`, `phi.i`, `tau`, `omega.i`, `kappa.i`, `lambda.i`,
//! `alpha`, `beta`, `nu` (i = 1..5) and `S.i.j` for `i < j`. A fit report adds
//! `se.<name>` (sandwich), `se_hessian.<name>`, `stars.<name>`, summary keys
//! (`weeks`, `converged`, `termination`, `iterations`, `gradient_norm`,
//! `loglik`, `initial_loglik`) and `comovements_csv`.

use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::data::N_SERIES;
use crate::error::{Error, Result};
use crate::estimation::{transform, FitConfig, FitReport, Stage, StandardErrors, Termination};
use crate::kv::KvFile;
use crate::likelihood::SystemParams;
use crate::simulation::{CovariatePolicy, SimSpec};
use crate::variance::HInit;

pub fn write_params(kv: &mut KvFile, p: &SystemParams) {
    for (name, v) in transform::free_names().iter().zip(transform::free_values(p)) {
        kv.set(name.clone(), v);
    }
    let n = p.correlation.n;
    for i in 0..n {
        for j in (i + 1)..n {
            kv.set(format!("S.{}.{}", i + 1, j + 1), p.correlation.target_entry(i, j));
        }
    }
}

/// Reads parameter keys, falling back to `base` for any that are absent.
pub fn read_params(kv: &KvFile, base: &SystemParams) -> Result<SystemParams> {
    let mut values = transform::free_values(base);
    for (k, name) in transform::free_names().iter().enumerate() {
        if let Some(v) = kv.parse_value::<f64>(name)? {
            values[k] = v;
        }
    }
    let mut target = base.correlation.target.clone();
    let n = N_SERIES;
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(v) = kv.parse_value::<f64>(&format!("S.{}.{}", i + 1, j + 1))? {
                target[i * n + j] = v;
                target[j * n + i] = v;
            }
        }
    }
    let p = transform::from_free_values(&values, &target);
    p.validate()?;
    Ok(p)
}

fn is_param_key(key: &str) -> bool {
    transform::free_names().iter().any(|n| n == key)
        || key
            .strip_prefix("S.")
            .and_then(|r| r.split_once('.'))
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .is_some_and(|(i, j)| (1..=N_SERIES).contains(&i) && (1..=N_SERIES).contains(&j) && i < j)
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::GradientTolerance => "gradient_tolerance",
        Termination::StepTolerance => "step_tolerance",
        Termination::LineSearchFailed => "line_search_failed",
        Termination::MaxIterations => "max_iterations",
    }
}

/// Renders `fit.out`. `comovements_csv` is stored verbatim for `report`.
pub fn fit_report_text(report: &FitReport, comovements_csv: &str) -> String {
    let mut kv = KvFile::new();
    kv.set("weeks", report.weeks);
    kv.set("converged", report.converged);
    kv.set("termination", termination_name(report.termination));
    kv.set("iterations", report.iterations);
    kv.set("gradient_norm", report.gradient_norm);
    kv.set("loglik", report.loglik);
    kv.set("initial_loglik", report.initial_loglik);
    write_params(&mut kv, &report.params);
    match &report.std_errors {
        Some(se) => {
            for (k, name) in se.names.iter().enumerate() {
                kv.set(format!("se.{name}"), se.robust[k]);
                kv.set(format!("se_hessian.{name}"), se.hessian[k]);
                kv.set(format!("stars.{name}"), se.stars(k));
            }
            kv.set("se_flat_directions", se.flat_directions);
        }
        None => kv.set("se_note", report.std_error_note.as_deref().unwrap_or("unavailable")),
    }
    kv.set("comovements_csv", comovements_csv);
    kv.render(&[
        "comove fit report",
        "se.* are sandwich (robust QML) standard errors; se_hessian.* use the inverse Hessian",
        "stars: *** 1%, ** 5%, * 10% (two-sided, robust z)",
    ])
}

/// What `report` needs back from a `fit.out`.
#[derive(Debug, Clone)]
pub struct SavedFit {
    pub params: SystemParams,
    pub std_errors: Option<StandardErrors>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub weeks: usize,
    pub comovements_csv: Option<String>,
}

pub fn parse_fit_report(text: &str) -> Result<SavedFit> {
    let kv = KvFile::parse(text)?;
    let required = |key: &str| kv.get(key).ok_or_else(|| Error::Config(format!("fit report lacks `{key}`")));
    for name in transform::free_names() {
        required(&name)?;
    }
    let params = read_params(&kv, &SystemParams::reference())?;
    let names = transform::free_names();
    let std_errors = if kv.get(&format!("se.{}", names[0])).is_some() {
        let mut robust = Vec::new();
        let mut hessian = Vec::new();
        for n in &names {
            robust.push(kv.parse_value::<f64>(&format!("se.{n}"))?.unwrap_or(f64::NAN));
            hessian.push(kv.parse_value::<f64>(&format!("se_hessian.{n}"))?.unwrap_or(f64::NAN));
        }
        Some(StandardErrors {
            estimates: transform::free_values(&params),
            names,
            robust,
            hessian,
            flat_directions: kv.parse_value("se_flat_directions")?.unwrap_or(0),
        })
    } else {
        None
    };
    Ok(SavedFit {
        params,
        std_errors,
        loglik: kv.parse_value(required("loglik").map(|_| "loglik")?)?.unwrap_or(f64::NAN),
        converged: kv.parse_value("converged")?.unwrap_or(false),
        iterations: kv.parse_value("iterations")?.unwrap_or(0),
        weeks: kv.parse_value("weeks")?.unwrap_or(0),
        comovements_csv: kv.get("comovements_csv").map(str::to_string),
    })
}

/// Parameter table laid out like the published estimates: rows are
/// parameters, columns the five spreads, entries `est*** (se)`.
pub fn parameter_table(params: &SystemParams, se: Option<&StandardErrors>) -> String {
    let names = transform::free_names();
    let values = transform::free_values(params);
    let cell = |name: &str| -> String {
        let k = names.iter().position(|n| n == name).expect("known name");
        match se {
            Some(se) => format!("{:.3}{} ({:.3})", values[k], se.stars(k), se.robust[k]),
            None => format!("{:.3}", values[k]),
        }
    };
    let mut s = String::new();
    let _ = write!(s, "{:<8}", "");
    for l in crate::data::SPREAD_LABELS {
        let _ = write!(s, "{l:>20}");
    }
    s.push('\n');
    for base in ["mu", "phi", "omega", "kappa", "lambda"] {
        let _ = write!(s, "{base:<8}");
        for i in 1..=N_SERIES {
            let _ = write!(s, "{:>20}", cell(&format!("{base}.{i}")));
        }
        s.push('\n');
    }
    let _ = writeln!(s, "{:<8}{:>100}", "tau", cell("tau"));
    for name in ["alpha", "beta", "nu"] {
        let _ = writeln!(s, "{name:<8}{:>20}", cell(name));
    }
    s
}

pub fn fit_config_from_kv(kv: &KvFile) -> Result<FitConfig> {
    let mut c = FitConfig::default();
    for key in kv.keys() {
        match key {
            "max_iterations" => c.max_iterations = kv.parse_value(key)?.expect("present"),
            "gradient_tolerance" => c.gradient_tolerance = kv.parse_value(key)?.expect("present"),
            "step_tolerance" => c.step_tolerance = kv.parse_value(key)?.expect("present"),
            "seed" => c.seed = kv.parse_value(key)?.expect("present"),
            "multistart" => c.multistart = kv.parse_value(key)?.expect("present"),
            "fd_step" => c.fd_step = kv.parse_value(key)?.expect("present"),
            "threads" => c.threads = kv.parse_value(key)?.expect("present"),
            "retarget_correlation" => c.retarget_correlation = kv.parse_value(key)?.expect("present"),
            "standard_errors" => c.standard_errors = kv.parse_value(key)?.expect("present"),
            "stage" => {
                c.stage = match kv.get(key).unwrap_or_default() {
                    "two_stage_init_then_joint" => Stage::TwoStageInitThenJoint,
                    "joint_only" => Stage::JointOnly,
                    other => return Err(Error::Config(format!("unknown stage `{other}`"))),
                }
            }
            "h_init" => c.h_init = parse_h_init(kv.get(key).unwrap_or_default())?,
            other => return Err(Error::Config(format!("unknown fit config key `{other}`"))),
        }
    }
    c.validate()?;
    Ok(c)
}

fn parse_h_init(v: &str) -> Result<HInit> {
    if v == "sample_variance" {
        return Ok(HInit::SampleVariance);
    }
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("h_init must be `sample_variance` or five numbers, got `{v}`")))?;
    let arr: [f64; N_SERIES] = parts
        .try_into()
        .map_err(|_| Error::Config("h_init needs exactly five values".into()))?;
    Ok(HInit::Fixed(arr))
}

pub fn fit_config_to_kv(c: &FitConfig) -> KvFile {
    let mut kv = KvFile::new();
    kv.set("max_iterations", c.max_iterations);
    kv.set("gradient_tolerance", c.gradient_tolerance);
    kv.set("step_tolerance", c.step_tolerance);
    kv.set(
        "stage",
        match c.stage {
            Stage::TwoStageInitThenJoint => "two_stage_init_then_joint",
            Stage::JointOnly => "joint_only",
        },
    );
    kv.set("seed", c.seed);
    kv.set("multistart", c.multistart);
    kv.set(
        "h_init",
        match c.h_init {
            HInit::SampleVariance => "sample_variance".to_string(),
            HInit::Fixed(h) => h.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        },
    );
    kv.set("retarget_correlation", c.retarget_correlation);
    kv.set("fd_step", c.fd_step);
    kv.set("threads", c.threads);
    kv.set("standard_errors", c.standard_errors);
    kv
}

/// Simulation spec keys: `weeks`, `seed`, `burn_in`, `start` (YYYY-MM-DD),
/// `covariate` (`ar1` or `constant`), `covariate.mean`,
/// `covariate.persistence`, `covariate.sd`, `covariate.value`, plus any
/// parameter keys (defaults: the reference parameters).
pub fn sim_spec_from_kv(kv: &KvFile) -> Result<SimSpec> {
    const SPEC_KEYS: [&str; 9] = [
        "weeks",
        "seed",
        "burn_in",
        "start",
        "covariate",
        "covariate.mean",
        "covariate.persistence",
        "covariate.sd",
        "covariate.value",
    ];
    if let Some(bad) = kv.keys().find(|k| !SPEC_KEYS.contains(k) && !is_param_key(k)) {
        return Err(Error::Config(format!("unknown simulation spec key `{bad}`")));
    }
    let params = read_params(kv, &SystemParams::reference())?;
    let weeks = kv
        .parse_value("weeks")?
        .ok_or_else(|| Error::Config("simulation spec needs `weeks`".into()))?;
    let mut spec = SimSpec::new(params, weeks, kv.parse_value("seed")?.unwrap_or(1));
    if let Some(b) = kv.parse_value("burn_in")? {
        spec.burn_in = b;
    }
    if let Some(s) = kv.get("start") {
        spec.start = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| Error::Config(format!("bad start date `{s}`")))?;
    }
    let default = CovariatePolicy::default();
    let CovariatePolicy::Ar1 { mean, persistence, sd } = default else {
        unreachable!()
    };
    spec.covariate = match kv.get("covariate").unwrap_or("ar1") {
        "ar1" => CovariatePolicy::Ar1 {
            mean: kv.parse_value("covariate.mean")?.unwrap_or(mean),
            persistence: kv.parse_value("covariate.persistence")?.unwrap_or(persistence),
            sd: kv.parse_value("covariate.sd")?.unwrap_or(sd),
        },
        "constant" => CovariatePolicy::Constant(kv.parse_value("covariate.value")?.unwrap_or(mean)),
        other => return Err(Error::Config(format!("unknown covariate policy `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}
