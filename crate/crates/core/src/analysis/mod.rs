//! Convergence measurements: total variation, exponential rate fits,
//! uniformity over initial laws and the mortality plateau.

mod curve;
mod plateau;
mod svg;
mod tv;
mod uniformity;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::spectral::SpectralError;

pub use curve::{convergence_curve, convergence_curves, fit_rate, fit_window, write_curves_csv, BurnIn, ConvergenceCurve, RateFit};
pub use plateau::{plateau_check, time_to_tv, PlateauReport, PLATEAU_FLUCTUATION};
pub use svg::line_plot_svg;
pub use tv::tv_distance;
pub use uniformity::{uniformity_report, InitialFit, UniformityReport};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("vectors have lengths {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no usable fit window: {0}")]
    EmptyWindow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Columns `initial, gamma, log_c, r_squared, t_lo, t_hi, points, error`.
pub fn write_fits_csv<W: Write>(fits: &[InitialFit], out: W) -> Result<(), AnalysisError> {
    #[derive(Serialize)]
    struct Row<'a> {
        initial: &'a str,
        gamma: Option<f64>,
        log_c: Option<f64>,
        r_squared: Option<f64>,
        t_lo: Option<f64>,
        t_hi: Option<f64>,
        points: Option<usize>,
        error: Option<&'a str>,
    }
    let mut w = csv::Writer::from_writer(out);
    for f in fits {
        let r = f.fit.as_ref();
        w.serialize(Row {
            initial: &f.initial,
            gamma: r.map(|r| r.gamma),
            log_c: r.map(|r| r.log_c),
            r_squared: r.map(|r| r.r_squared),
            t_lo: r.map(|r| r.window.0),
            t_hi: r.map(|r| r.window.1),
            points: r.map(|r| r.points),
            error: f.error.as_deref(),
        })?;
    }
    w.flush()?;
    Ok(())
}
