//! Lyapunov-type criteria for coming down from infinity and for uniform
//! exponential convergence to the quasi-stationary distribution.

mod drift;
mod multitype;
mod one_dim;
mod pi;
mod report;
mod series;
mod suite;

use thiserror::Error;

use crate::model::ModelError;

pub use drift::{
    measure_drift_check, measure_from_table, measure_margin, pointwise_drift_check, pointwise_from_table,
    random_measure, DriftForm, DriftPoint, DriftTable, LyapunovPair,
};
pub use multitype::{
    alt_h1_holds_at, alt_h1_sides, check_alt_h1, check_domination, check_h1, check_h2, default_eps, h1_holds_at,
    h1_sides, ShellOscillation, ShellPotential, STATE_BUDGET,
};
pub use one_dim::{
    build_v_1d, check_oscillation_1d, check_series_s, check_w_condition, series_s, suggest_w, OscillationData, VTable,
};
pub use pi::PiWeights;
pub use report::{LyapunovReport, Verdict};
pub use suite::{
    run_multi_type, run_one_dim, run_suite, SuiteSettings, DEFAULT_MEASURES, DEFAULT_RANGE, MULTI_TYPE_CRITERIA, ONE_DIM_CRITERIA,
};
pub use series::{sum_certified, SeriesConfig, SeriesEstimate, SeriesStatus, TailMethod};

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("invalid weight function: {0}")]
    InvalidW(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
