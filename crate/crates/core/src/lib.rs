//! Weekly money-market spread co-movements from a penta-variate
//! AR(1)-DCC(1,1)-GARCH(1,1) model with Student-t innovations.
//!
//! The pipeline runs: daily rates ([`data`]) to weekly spreads, unit-root
//! pretests ([`stationarity`]), joint quasi-maximum-likelihood estimation
//! ([`estimation`]) of the mean ([`mean`]), variance ([`variance`]) and
//! correlation ([`correlation`]) recursions, and extraction of the six
//! co-movement series. [`simulation`] runs the model generatively.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod data;
pub mod error;
pub mod estimation;
pub mod kv;
pub mod likelihood;
pub mod linalg;
pub mod mean;
pub mod report;
pub mod simulation;
pub mod stationarity;
pub mod variance;

pub use correlation::{ComovementSeries, CorrelationPath, DccParams};
pub use data::{DailyRateTable, SpreadPanel};
pub use error::{Error, Result};
pub use estimation::{FitConfig, FitReport};
pub use likelihood::{LogLikelihood, SystemParams};
pub use mean::MeanParams;
pub use simulation::SimSpec;
pub use variance::GarchParams;
