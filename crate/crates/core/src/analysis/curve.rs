use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{tv_distance, AnalysisError};
use crate::numeric::linear_fit;
use crate::spectral::{evolve_times, SpectralResult, TruncatedGenerator};

/// `t ↦ ‖μ_t - ν_QSD‖_TV` for one initial law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceCurve {
    pub initial: String,
    pub times: Vec<f64>,
    pub tv: Vec<f64>,
}

/// Evolves `mu0` through the nondecreasing `times` and measures the distance
/// to the QSD at each.
pub fn convergence_curve(
    gen: &TruncatedGenerator,
    spectral: &SpectralResult,
    mu0: &[f64],
    times: &[f64],
    tol: f64,
    label: impl Into<String>,
) -> Result<ConvergenceCurve, AnalysisError> {
    let laws = evolve_times(gen, mu0, times, tol)?;
    let tv = laws.iter().map(|l| tv_distance(&l.dist, &spectral.qsd)).collect::<Result<_, _>>()?;
    Ok(ConvergenceCurve { initial: label.into(), times: times.to_vec(), tv })
}

/// Curves for several initial laws, computed in parallel, in input order.
pub fn convergence_curves(
    gen: &TruncatedGenerator,
    spectral: &SpectralResult,
    initials: &[(String, Vec<f64>)],
    times: &[f64],
    tol: f64,
) -> Result<Vec<ConvergenceCurve>, AnalysisError> {
    initials
        .par_iter()
        .map(|(label, mu0)| convergence_curve(gen, spectral, mu0, times, tol, label.clone()))
        .collect()
}

/// Which part of a curve is treated as the exponential regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BurnIn {
    /// Points before the curve first drops to `head_fraction · tv(0)` are skipped.
    pub head_fraction: f64,
    /// The window ends at the first point below this floor.
    pub floor: f64,
    pub min_points: usize,
}

impl BurnIn {
    /// Half the initial distance; floor at ten times the evolution tolerance.
    pub fn for_tolerance(tol_evolve: f64) -> Self {
        BurnIn { head_fraction: 0.5, floor: 10.0 * tol_evolve, min_points: 5 }
    }
}

/// `tv(t) ≈ C e^{-γt}` on a window of a curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub gamma: f64,
    pub log_c: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl RateFit {
    pub fn implied_c(&self) -> f64 {
        self.log_c.exp()
    }
}

/// Index range `[start, end)` selected by `policy`.
pub fn fit_window(curve: &ConvergenceCurve, policy: &BurnIn) -> Result<(usize, usize), AnalysisError> {
    let Some(&tv0) = curve.tv.first() else {
        return Err(AnalysisError::EmptyWindow("empty curve".into()));
    };
    let head = policy.head_fraction * tv0;
    let start = curve
        .tv
        .iter()
        .position(|&v| v <= head && v >= policy.floor && v > 0.0)
        .ok_or_else(|| AnalysisError::EmptyWindow("the curve never enters the fit window".into()))?;
    let end = curve.tv[start..].iter().position(|&v| v < policy.floor || v <= 0.0).map_or(curve.tv.len(), |k| start + k);
    if end - start < policy.min_points {
        return Err(AnalysisError::EmptyWindow(format!(
            "{} points in the fit window, at least {} needed",
            end - start,
            policy.min_points
        )));
    }
    Ok((start, end))
}

/// Least squares of `log tv` against `t` on the burn-in window.
pub fn fit_rate(curve: &ConvergenceCurve, policy: &BurnIn) -> Result<RateFit, AnalysisError> {
    let (start, end) = fit_window(curve, policy)?;
    let t = &curve.times[start..end];
    let y: Vec<f64> = curve.tv[start..end].iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) =
        linear_fit(t, &y).ok_or_else(|| AnalysisError::EmptyWindow("degenerate fit window".into()))?;
    Ok(RateFit { gamma: -slope, log_c: intercept, r_squared: r2, window: (t[0], t[t.len() - 1]), points: end - start })
}

/// Columns `initial, t, tv`.
pub fn write_curves_csv<W: Write>(curves: &[ConvergenceCurve], out: W) -> Result<(), AnalysisError> {
    #[derive(Serialize)]
    struct Row<'a> {
        initial: &'a str,
        t: f64,
        tv: f64,
    }
    let mut w = csv::Writer::from_writer(out);
    for c in curves {
        for (&t, &tv) in c.times.iter().zip(&c.tv) {
            w.serialize(Row { initial: &c.initial, t, tv })?;
        }
    }
    w.flush()?;
    Ok(())
}
