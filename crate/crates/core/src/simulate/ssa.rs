use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{SeededRng, SimError, Trajectory};
use crate::model::{AbsorbedChain, State, Target};

/// Where a path stands at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Alive(State),
    Absorbed(f64),
}

/// Exact event-driven simulation up to absorption or `horizon`.
pub fn ssa_trajectory(chain: &dyn AbsorbedChain, x0: &State, horizon: f64, rng: &SeededRng) -> Result<Trajectory, SimError> {
    ssa_with(chain, x0, horizon, &mut rng.generator())
}

pub fn ssa_with<R: Rng + ?Sized>(chain: &dyn AbsorbedChain, x0: &State, horizon: f64, rng: &mut R) -> Result<Trajectory, SimError> {
    let mut records = vec![(0.0, x0.clone())];
    let end = walk(chain, x0, horizon, rng, |t, y| records.push((t, y.clone())))?;
    let absorption_time = match end {
        Outcome::Absorbed(t) => Some(t),
        Outcome::Alive(_) => None,
    };
    Ok(Trajectory { records, absorption_time, horizon })
}

/// State at `horizon` without recording the path.
pub fn state_at<R: Rng + ?Sized>(chain: &dyn AbsorbedChain, x0: &State, horizon: f64, rng: &mut R) -> Result<Outcome, SimError> {
    walk(chain, x0, horizon, rng, |_, _| {})
}

/// Draws one jump from `x`: the holding time and the destination.
pub(crate) fn next_jump<R: Rng + ?Sized>(chain: &dyn AbsorbedChain, x: &State, rng: &mut R) -> Result<Option<(f64, Target)>, SimError> {
    let list = chain.transitions_from(x)?;
    let total = list.total_rate;
    if !total.is_finite() {
        return Err(SimError::RateOverflow { state: x.clone(), rate: total });
    }
    if total <= 0.0 {
        return Ok(None);
    }
    let hold = <Exp1 as Distribution<f64>>::sample(&Exp1, rng) / total;
    let mut u: f64 = rng.gen::<f64>() * total;
    let last = list.transitions.len() - 1;
    for (k, t) in list.transitions.into_iter().enumerate() {
        u -= t.rate;
        if u < 0.0 || k == last {
            return Ok(Some((hold, t.target)));
        }
    }
    unreachable!("transition list is nonempty")
}

fn walk<R: Rng + ?Sized>(
    chain: &dyn AbsorbedChain,
    x0: &State,
    horizon: f64,
    rng: &mut R,
    mut on_jump: impl FnMut(f64, &State),
) -> Result<Outcome, SimError> {
    chain.check_dim(x0)?;
    if !(horizon >= 0.0) {
        return Err(SimError::InvalidInput(format!("horizon {horizon} must be nonnegative")));
    }
    let mut t = 0.0;
    let mut x = x0.clone();
    loop {
        let Some((hold, target)) = next_jump(chain, &x, rng)? else {
            return Ok(Outcome::Alive(x));
        };
        t += hold;
        if t >= horizon {
            return Ok(Outcome::Alive(x));
        }
        match target {
            Target::Absorbed => return Ok(Outcome::Absorbed(t)),
            Target::State(y) => {
                on_jump(t, &y);
                x = y;
            }
        }
    }
}
