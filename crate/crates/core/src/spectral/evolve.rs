use serde::Serialize;

use super::generator::UniformKernel;
use super::qsd::FLUSH;
use super::{SpectralError, TruncatedGenerator};
use crate::numeric::compensated_sum;

/// Largest Poisson parameter `Λ·Δt` handled in one uniformization chunk.
pub const MAX_CHUNK_THETA: f64 = 500.0;

/// `μ_t = P_μ(X_t ∈ · | t < τ_∂)` on the retained states.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalLaw {
    pub time: f64,
    pub dist: Vec<f64>,
    /// `P_μ(t < τ_∂)`.
    pub survival: f64,
    pub log_survival: f64,
    /// Mass accumulated in `∂` up to `time`.
    pub killed: f64,
}

impl ConditionalLaw {
    pub fn initial(mu0: &[f64]) -> Result<Self, SpectralError> {
        if mu0.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(SpectralError::InvalidInput("initial law has negative or non-finite entries".into()));
        }
        let s = compensated_sum(mu0.iter().copied());
        if (s - 1.0).abs() > 1e-9 {
            return Err(SpectralError::InvalidInput(format!("initial law sums to {s}, not 1")));
        }
        Ok(ConditionalLaw {
            time: 0.0,
            dist: mu0.iter().map(|v| v / s).collect(),
            survival: 1.0,
            log_survival: 0.0,
            killed: 0.0,
        })
    }

    /// `μ_t(f)`.
    pub fn mean(&self, f: &[f64]) -> f64 {
        compensated_sum(self.dist.iter().zip(f).map(|(p, v)| p * v))
    }
}

/// Point mass on retained state `i`.
pub fn delta(gen: &TruncatedGenerator, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; gen.len()];
    v[i] = 1.0;
    v
}

/// `μ₀ e^{tL}` normalized, with its mass recorded as the survival probability.
///
/// The total Poisson-tail mass discarded over the whole interval is at most
/// `tol`.
pub fn evolve(gen: &TruncatedGenerator, mu0: &[f64], t: f64, tol: f64) -> Result<ConditionalLaw, SpectralError> {
    if mu0.len() != gen.len() {
        return Err(SpectralError::InvalidInput(format!("initial law has {} entries, expected {}", mu0.len(), gen.len())));
    }
    evolve_from(gen, &ConditionalLaw::initial(mu0)?, t, tol)
}

/// Advances `law` by `dt`.
pub fn evolve_from(gen: &TruncatedGenerator, law: &ConditionalLaw, dt: f64, tol: f64) -> Result<ConditionalLaw, SpectralError> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(SpectralError::InvalidInput(format!("time step {dt} must be finite and nonnegative")));
    }
    if !(tol > 0.0) {
        return Err(SpectralError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let lambda = gen.lambda();
    let mut out = law.clone();
    out.time = law.time + dt;
    if dt == 0.0 || lambda == 0.0 {
        return Ok(out);
    }
    let total = lambda * dt;
    let chunks = (total / MAX_CHUNK_THETA).ceil().max(1.0);
    let theta = total / chunks;
    let tol_chunk = tol / chunks;
    let kernel = gen.kernel(lambda);
    let mut work = Work::new(gen.len());
    for _ in 0..chunks as u64 {
        let (surv, dead) = chunk(gen, &kernel, lambda, theta, tol_chunk, &mut out.dist, &mut work)?;
        let frac = surv / (surv + dead);
        out.killed += out.survival * (dead / (surv + dead));
        out.log_survival += frac.ln();
        out.survival = out.log_survival.exp();
    }
    Ok(out)
}

/// Laws at each of the nondecreasing `times`, obtained by successive steps.
pub fn evolve_times(gen: &TruncatedGenerator, mu0: &[f64], times: &[f64], tol: f64) -> Result<Vec<ConditionalLaw>, SpectralError> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpectralError::InvalidInput("times must be nondecreasing".into()));
    }
    let mut law = ConditionalLaw::initial(mu0)?;
    if mu0.len() != gen.len() {
        return Err(SpectralError::InvalidInput(format!("initial law has {} entries, expected {}", mu0.len(), gen.len())));
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        law = evolve_from(gen, &law, t - law.time, tol)?;
        law.time = t;
        out.push(law.clone());
    }
    Ok(out)
}

struct Work {
    v: Vec<f64>,
    next: Vec<f64>,
    acc: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Work { v: vec![0.0; n], next: vec![0.0; n], acc: vec![0.0; n] }
    }
}

/// One uniformization chunk with Poisson parameter `theta`. Replaces `dist`
/// by the normalized law and returns `(surviving mass, absorbed mass)`.
fn chunk(
    gen: &TruncatedGenerator,
    kernel: &UniformKernel<'_>,
    lambda: f64,
    theta: f64,
    tol: f64,
    dist: &mut [f64],
    w: &mut Work,
) -> Result<(f64, f64), SpectralError> {
    let budget = (theta + 40.0 * (theta + 1.0).sqrt() + 700.0) as u64;
    w.v.copy_from_slice(dist);
    let mut weight = (-theta).exp();
    let mut dead = 0.0;
    let mut acc_dead = 0.0;
    for (a, v) in w.acc.iter_mut().zip(&w.v) {
        *a = weight * v;
    }
    let mut n: u64 = 0;
    loop {
        let next_weight = weight * theta / (n + 1) as f64;
        let nf = n as f64;
        if nf + 2.0 > theta {
            let tail = next_weight / (1.0 - theta / (nf + 2.0));
            if tail <= tol {
                break;
            }
        }
        if n >= budget {
            return Err(SpectralError::EvolveBudget { theta, tol });
        }
        dead += w.v.iter().zip(gen.absorption()).map(|(p, a)| p * a).sum::<f64>() / lambda;
        kernel.step_left(&w.v, &mut w.next);
        std::mem::swap(&mut w.v, &mut w.next);
        w.v.iter_mut().filter(|x| **x < FLUSH).for_each(|x| *x = 0.0);
        weight = next_weight;
        n += 1;
        for (a, v) in w.acc.iter_mut().zip(&w.v) {
            let t = weight * v;
            if t >= FLUSH {
                *a += t;
            }
        }
        acc_dead += weight * dead;
    }
    let surv = compensated_sum(w.acc.iter().copied());
    for (d, a) in dist.iter_mut().zip(&w.acc) {
        *d = a / surv;
    }
    let renorm = compensated_sum(dist.iter().copied());
    dist.iter_mut().for_each(|d| *d /= renorm);
    Ok((surv, acc_dead))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::spectral::truncate;

    #[test]
    fn time_zero_is_identity() {
        let g = truncate(&presets::two_state(), 2).unwrap();
        let law = evolve(&g, &[1.0, 0.0], 0.0, 1e-12).unwrap();
        assert_eq!(law.dist, vec![1.0, 0.0]);
        assert_eq!(law.survival, 1.0);
    }

    #[test]
    fn two_state_survival_closed_form() {
        let g = truncate(&presets::two_state(), 2).unwrap();
        let law = evolve(&g, &[1.0, 0.0], 1.0, 1e-14).unwrap();
        let s5 = 5f64.sqrt();
        let (l1, l2) = ((-3.0 + s5) / 2.0, (-3.0 - s5) / 2.0);
        let exact = (l1.exp() * (-1.0 - l2) - l2.exp() * (-1.0 - l1)) / s5;
        assert!((law.survival - exact).abs() < 1e-12, "{} vs {exact}", law.survival);
        assert!((law.survival + law.killed - 1.0).abs() < 1e-14);
    }

    #[test]
    fn long_horizon_uses_many_chunks() {
        let g = truncate(&presets::logistic(1.0, 1.0, 1.0), 40).unwrap();
        let law = evolve(&g, &delta(&g, 0), 2.0, 1e-12).unwrap();
        assert!(g.lambda() * 2.0 > MAX_CHUNK_THETA);
        assert!((law.dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((law.survival + law.killed - 1.0).abs() < 1e-12);
    }
}
