use serde::Serialize;

use super::{tv_distance, AnalysisError};
use crate::spectral::{evolve_from, ConditionalLaw, SpectralResult, TruncatedGenerator};

/// Relative fluctuation accepted as a plateau.
pub const PLATEAU_FLUCTUATION: f64 = 1e-3;
const SAMPLES: usize = 21;

/// `t ↦ e^{λ₀t} P_x(t < τ_∂)` on `[T, 2T]`.
#[derive(Clone, Debug, Serialize)]
pub struct PlateauReport {
    pub window: (f64, f64),
    pub samples: Vec<(f64, f64)>,
    /// `(max - min) / mean` of the samples.
    pub relative_fluctuation: f64,
    /// Last sample, the estimate of `η(x)`.
    pub limit: f64,
    pub eta_at_start: f64,
    /// `max_t |P_ν(t < τ_∂) - e^{-λ₀t}|` over the same times.
    pub qsd_exponential_error: f64,
    pub flat: bool,
    pub advice: Option<String>,
}

/// Runs the chain from retained state `x0` and from the QSD up to `2T`.
pub fn plateau_check(
    gen: &TruncatedGenerator,
    spectral: &SpectralResult,
    x0: usize,
    t_start: f64,
    tol: f64,
) -> Result<PlateauReport, AnalysisError> {
    if !(t_start > 0.0) {
        return Err(AnalysisError::InvalidInput(format!("T = {t_start} must be positive")));
    }
    if x0 >= gen.len() {
        return Err(AnalysisError::InvalidInput(format!("state index {x0} is not retained")));
    }
    let l0 = spectral.lambda0;
    let mut from_x = ConditionalLaw::initial(&crate::spectral::delta(gen, x0))?;
    let mut from_q = ConditionalLaw::initial(&spectral.qsd)?;
    let step = t_start / (SAMPLES - 1) as f64;
    let mut samples = Vec::with_capacity(SAMPLES);
    let mut qerr: f64 = 0.0;
    for k in 0..SAMPLES {
        let t = t_start + k as f64 * step;
        from_x = evolve_from(gen, &from_x, t - from_x.time, tol)?;
        from_q = evolve_from(gen, &from_q, t - from_q.time, tol)?;
        samples.push((t, (l0 * t + from_x.log_survival).exp()));
        qerr = qerr.max((from_q.survival - (-l0 * t).exp()).abs());
    }
    let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
    let relative_fluctuation = (hi - lo) / mean;
    let flat = relative_fluctuation <= PLATEAU_FLUCTUATION;
    Ok(PlateauReport {
        window: (t_start, 2.0 * t_start),
        limit: *vals.last().expect("samples"),
        samples,
        relative_fluctuation,
        eta_at_start: spectral.eta_fn[x0],
        qsd_exponential_error: qerr,
        flat,
        advice: (!flat).then(|| "increase T: the plateau has not been reached".to_string()),
    })
}

/// First multiple of `dt` at which `‖μ_t - ν_QSD‖_TV ≤ target`.
pub fn time_to_tv(
    gen: &TruncatedGenerator,
    spectral: &SpectralResult,
    mu0: &[f64],
    target: f64,
    dt: f64,
    max_steps: usize,
    tol: f64,
) -> Result<f64, AnalysisError> {
    let mut law = ConditionalLaw::initial(mu0)?;
    for _ in 0..=max_steps {
        if tv_distance(&law.dist, &spectral.qsd)? <= target {
            return Ok(law.time);
        }
        law = evolve_from(gen, &law, dt, tol)?;
    }
    Err(AnalysisError::InvalidInput(format!("TV did not reach {target} within {max_steps} steps of {dt}")))
}
