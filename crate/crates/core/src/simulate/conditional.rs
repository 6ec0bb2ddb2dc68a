use std::collections::BTreeMap;

use rayon::prelude::*;

use super::ssa::{state_at, Outcome};
use super::{SeededRng, SimError};
use crate::model::{AbsorbedChain, State};
use crate::spectral::TruncatedGenerator;

/// Empirical `P_x(X_t ∈ · | t < τ_∂)` from independent paths.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalEstimate {
    pub time: f64,
    pub n_traj: usize,
    /// Survivor counts per state.
    pub counts: BTreeMap<State, u64>,
    pub survivors: u64,
}

impl ConditionalEstimate {
    /// Estimate of `P_x(t < τ_∂)`.
    pub fn survival_fraction(&self) -> f64 {
        self.survivors as f64 / self.n_traj as f64
    }

    pub fn all_absorbed(&self) -> bool {
        self.survivors == 0
    }

    /// Normalized histogram indexed like `gen`, and the survivor fraction
    /// lying outside the truncation. `None` when every path was absorbed.
    pub fn histogram_on(&self, gen: &TruncatedGenerator) -> Option<(Vec<f64>, f64)> {
        if self.all_absorbed() {
            return None;
        }
        let n = self.survivors as f64;
        let mut h = vec![0.0; gen.len()];
        let mut outside = 0.0;
        for (x, &c) in &self.counts {
            match gen.index_of(x) {
                Some(i) => h[i] += c as f64 / n,
                None => outside += c as f64 / n,
            }
        }
        Some((h, outside))
    }
}

/// Runs `n_traj` paths from `x0` to time `t`; path `i` uses `rng.child(i)`.
pub fn conditional_estimate(
    chain: &dyn AbsorbedChain,
    x0: &State,
    t: f64,
    n_traj: usize,
    rng: &SeededRng,
) -> Result<ConditionalEstimate, SimError> {
    if n_traj == 0 {
        return Err(SimError::InvalidInput("at least one trajectory is required".into()));
    }
    let outcomes: Vec<Outcome> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| state_at(chain, x0, t, &mut rng.child(i).generator()))
        .collect::<Result<_, _>>()?;
    let mut counts = BTreeMap::new();
    let mut survivors = 0;
    for o in outcomes {
        if let Outcome::Alive(x) = o {
            *counts.entry(x).or_insert(0) += 1;
            survivors += 1;
        }
    }
    Ok(ConditionalEstimate { time: t, n_traj, counts, survivors })
}

/// `τ_∂` of `n` independent paths from `x0`, censored at `horizon` (`None`).
pub fn absorption_times(
    chain: &dyn AbsorbedChain,
    x0: &State,
    horizon: f64,
    n: usize,
    rng: &SeededRng,
) -> Result<Vec<Option<f64>>, SimError> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            state_at(chain, x0, horizon, &mut rng.child(i).generator()).map(|o| match o {
                Outcome::Absorbed(t) => Some(t),
                Outcome::Alive(_) => None,
            })
        })
        .collect()
}
