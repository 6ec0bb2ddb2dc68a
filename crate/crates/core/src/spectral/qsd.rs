use serde::Serialize;

use super::{SpectralError, TruncatedGenerator};
use crate::numeric::compensated_sum;

/// Uniformization rate used by the power iteration, relative to `Λ`. A factor
/// above 1 keeps every diagonal entry of the kernel positive.
pub const UNIFORMIZATION_FACTOR: f64 = 1.25;
pub const DEFAULT_MAX_ITER: u64 = 20_000_000;
const CHECK_EVERY: u64 = 64;

/// `(λ₀, ν_QSD, η)` of a truncation, with `ν·η = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub lambda0: f64,
    pub qsd: Vec<f64>,
    pub eta_fn: Vec<f64>,
    /// `(‖νL + λ₀ν‖₁, ‖Lη + λ₀η‖_∞ / (Λ‖η‖_∞))`.
    pub residuals: (f64, f64),
    pub iterations: u64,
}

impl SpectralResult {
    /// The law proportional to `ν(x)η(x)`: the stationary law of the Q-process.
    pub fn q_stationary(&self) -> Vec<f64> {
        let w: Vec<f64> = self.qsd.iter().zip(&self.eta_fn).map(|(a, b)| a * b).collect();
        let s = compensated_sum(w.iter().copied());
        w.into_iter().map(|v| v / s).collect()
    }
}

#[derive(Clone, Debug)]
pub struct QsdOptions {
    pub tol: f64,
    pub max_iter: u64,
    /// Starting vectors `(ν, η)`; nonnegative and not identically zero.
    pub warm_start: Option<(Vec<f64>, Vec<f64>)>,
}

impl QsdOptions {
    pub fn new(tol: f64) -> Self {
        QsdOptions { tol, max_iter: DEFAULT_MAX_ITER, warm_start: None }
    }
}

pub fn left_residual(gen: &TruncatedGenerator, lambda0: f64, qsd: &[f64]) -> f64 {
    let l = gen.apply_left(qsd);
    compensated_sum(l.iter().zip(qsd).map(|(a, b)| (a + lambda0 * b).abs()))
}

pub fn right_residual(gen: &TruncatedGenerator, lambda0: f64, eta: &[f64]) -> f64 {
    let l = gen.apply(eta);
    let num = l.iter().zip(eta).map(|(a, b)| (a + lambda0 * b).abs()).fold(0.0, f64::max);
    let den = eta.iter().map(|v| v.abs()).fold(0.0, f64::max) * gen.lambda();
    num / den
}

/// Power iteration for the Perron triple of the sub-Markov semigroup.
pub fn qsd_solve(gen: &TruncatedGenerator, tol: f64) -> Result<SpectralResult, SpectralError> {
    qsd_solve_with(gen, &QsdOptions::new(tol))
}

/// Iterates `ν ← νP/|νP|` and `η ← Pη/‖Pη‖_∞` with `P = I + L/(1.25Λ)`.
///
/// `λ₀ = ν·a` where `a = -L𝟙_E`: the mass lost in one step of the normalized
/// iteration is `ν·a / (1.25Λ)`, so this is the geometric decay rate read off
/// without cancellation.
pub fn qsd_solve_with(gen: &TruncatedGenerator, opts: &QsdOptions) -> Result<SpectralResult, SpectralError> {
    if !(opts.tol > 0.0) {
        return Err(SpectralError::InvalidInput(format!("tolerance {} must be positive", opts.tol)));
    }
    let n = gen.len();
    if gen.absorption().iter().all(|&a| a <= 0.0) {
        return Err(SpectralError::NoAbsorption);
    }
    if !gen.is_irreducible() {
        return Err(SpectralError::Reducible);
    }
    let theta = UNIFORMIZATION_FACTOR * gen.lambda();
    let (mut nu, mut eta) = match &opts.warm_start {
        Some((a, b))
            if a.len() == n
                && b.len() == n
                && a.iter().chain(b).all(|&v| v >= 0.0 && v.is_finite())
                && a.iter().any(|&v| v > 0.0)
                && b.iter().any(|&v| v > 0.0) =>
        {
            (a.clone(), b.clone())
        }
        Some(_) => return Err(SpectralError::InvalidInput("warm start must be nonnegative, nonzero vectors of matching length".into())),
        None => (vec![1.0; n], vec![1.0; n]),
    };
    normalize_sum(&mut nu);
    normalize_max(&mut eta);
    let kernel = gen.kernel(theta);
    let mut buf = vec![0.0; n];
    let mut last = (f64::INFINITY, f64::INFINITY);
    let mut iter = 0;
    loop {
        if iter % CHECK_EVERY == 0 || iter >= opts.max_iter {
            let lambda0 = dot(&nu, gen.absorption());
            last = (left_residual(gen, lambda0, &nu), right_residual(gen, lambda0, &eta));
            if last.0 <= opts.tol && last.1 <= opts.tol {
                let scale = dot(&nu, &eta);
                eta.iter_mut().for_each(|v| *v /= scale);
                let residuals = (last.0, right_residual(gen, lambda0, &eta));
                return Ok(SpectralResult { lambda0, qsd: nu, eta_fn: eta, residuals, iterations: iter });
            }
            if iter >= opts.max_iter {
                return Err(SpectralError::NotConverged { iterations: iter, left_residual: last.0, right_residual: last.1 });
            }
        }
        kernel.step_left(&nu, &mut buf);
        std::mem::swap(&mut nu, &mut buf);
        normalize_sum(&mut nu);
        kernel.step_right(&eta, &mut buf);
        std::mem::swap(&mut eta, &mut buf);
        normalize_max(&mut eta);
        iter += 1;
        if !nu[0].is_finite() || !eta[0].is_finite() {
            return Err(SpectralError::NotConverged { iterations: iter, left_residual: last.0, right_residual: last.1 });
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Entries below this are set to zero; subnormal arithmetic is slow and the
/// values are far below any tolerance.
pub(crate) const FLUSH: f64 = 1e-280;

fn normalize_sum(v: &mut [f64]) {
    let inv = 1.0 / v.iter().sum::<f64>();
    v.iter_mut().for_each(|x| {
        *x *= inv;
        if *x < FLUSH {
            *x = 0.0;
        }
    });
}

fn normalize_max(v: &mut [f64]) {
    let inv = 1.0 / v.iter().copied().fold(0.0, f64::max);
    v.iter_mut().for_each(|x| {
        *x *= inv;
        if *x < FLUSH {
            *x = 0.0;
        }
    });
}
