use serde::Serialize;

use super::{convergence_curves, fit_rate, AnalysisError, BurnIn, ConvergenceCurve, RateFit};
use crate::spectral::{SpectralResult, TruncatedGenerator};

#[derive(Clone, Debug, Serialize)]
pub struct InitialFit {
    pub initial: String,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

/// Rate fits across initial laws. Uniformity is reported as the spread of
/// `γ` and the table of implied constants, never as a single boolean.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub fits: Vec<InitialFit>,
    /// `(t, max over initials of tv(t))`.
    pub max_tv: Vec<(f64, f64)>,
    /// `(max γ - min γ) / mean γ` over successful fits.
    pub gamma_spread: f64,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub curves: Vec<ConvergenceCurve>,
}

pub fn uniformity_report(
    gen: &TruncatedGenerator,
    spectral: &SpectralResult,
    initials: &[(String, Vec<f64>)],
    times: &[f64],
    tol: f64,
    policy: &BurnIn,
    spread_limit: f64,
) -> Result<UniformityReport, AnalysisError> {
    let curves = convergence_curves(gen, spectral, initials, times, tol)?;
    let fits: Vec<InitialFit> = curves
        .iter()
        .map(|c| match fit_rate(c, policy) {
            Ok(f) => InitialFit { initial: c.initial.clone(), fit: Some(f), error: None },
            Err(e) => InitialFit { initial: c.initial.clone(), fit: None, error: Some(e.to_string()) },
        })
        .collect();
    let max_tv = times
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, curves.iter().map(|c| c.tv[k]).fold(0.0, f64::max)))
        .collect();
    let gammas: Vec<f64> = fits.iter().filter_map(|f| f.fit.as_ref().map(|r| r.gamma)).collect();
    let mut flags = Vec::new();
    let gamma_spread = if gammas.is_empty() {
        flags.push("no initial law produced a rate fit".into());
        f64::NAN
    } else {
        let mean = gammas.iter().sum::<f64>() / gammas.len() as f64;
        let (lo, hi) = gammas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &g| (a.0.min(g), a.1.max(g)));
        (hi - lo) / mean
    };
    if gamma_spread > spread_limit {
        flags.push(format!("gamma spread {gamma_spread:.4} exceeds {spread_limit}"));
    }
    if gammas.iter().any(|&g| !(g > 0.0)) {
        flags.push("a fitted rate is not positive".into());
    }
    let cs: Vec<f64> = fits.iter().filter_map(|f| f.fit.as_ref().map(RateFit::implied_c)).collect();
    if cs.len() >= 3 && cs.windows(2).all(|w| w[1] > w[0]) {
        flags.push("implied C grows along the list of initial laws".into());
    }
    if fits.iter().any(|f| f.fit.is_none()) {
        flags.push("some initial laws have no fit window".into());
    }
    Ok(UniformityReport { fits, max_tv, gamma_spread, flags, curves })
}
