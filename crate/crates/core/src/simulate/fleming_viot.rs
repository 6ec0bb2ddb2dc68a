use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ssa::next_jump;
use super::{SeededRng, SimError};
use crate::model::{AbsorbedChain, State, Target};
use crate::spectral::TruncatedGenerator;

/// Positions of the particles at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub particles: Vec<State>,
}

impl Snapshot {
    /// Empirical law indexed like `gen`, and the fraction outside it.
    pub fn empirical_on(&self, gen: &TruncatedGenerator) -> (Vec<f64>, f64) {
        let n = self.particles.len() as f64;
        let mut h = vec![0.0; gen.len()];
        let mut outside = 0.0;
        for x in &self.particles {
            match gen.index_of(x) {
                Some(i) => h[i] += 1.0 / n,
                None => outside += 1.0 / n,
            }
        }
        (h, outside)
    }
}

/// One resampling: at `time`, particle `particle` was absorbed and restarted
/// at the position of particle `source`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resampling {
    pub time: f64,
    pub particle: usize,
    pub source: usize,
}

/// Timeline of a Fleming–Viot run.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    pub snapshots: Vec<Snapshot>,
    pub resamplings: Vec<Resampling>,
    pub last: Snapshot,
}

impl ParticleEnsemble {
    /// Columns `time, particle, x1, ..., xr`, one row per particle and
    /// snapshot, the final state included.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let dim = self.last.particles.first().map_or(1, State::dim);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string(), "particle".to_string()];
        header.extend((1..=dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        let last_is_snapshot = self.snapshots.last().is_some_and(|s| s.time == self.last.time);
        let extra = (!last_is_snapshot).then_some(&self.last);
        for snap in self.snapshots.iter().chain(extra) {
            for (id, x) in snap.particles.iter().enumerate() {
                let mut row = vec![format!("{:.17e}", snap.time), id.to_string()];
                row.extend(x.coords().iter().map(u32::to_string));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(PartialEq)]
struct Clock(f64, usize);

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    // Reversed: the heap pops the earliest time, ties by lowest particle id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Draws from a finite law given as `(state, weight)` pairs.
fn sample_law(law: &[(State, f64)], rng: &mut ChaCha8Rng) -> State {
    let total: f64 = law.iter().map(|e| e.1).sum();
    let mut u = rng.gen::<f64>() * total;
    for (x, w) in law {
        u -= w;
        if u < 0.0 {
            return x.clone();
        }
    }
    law.last().expect("nonempty law").0.clone()
}

/// `n_particles` copies of the chain; an absorbed particle jumps at once to
/// the position of one of the other `n - 1` particles, chosen uniformly.
///
/// Initial positions are drawn independently from `x0_law`. Snapshots are
/// taken at each of `snapshot_times` that is `≤ horizon`, and at `horizon`.
pub fn fleming_viot(
    chain: &dyn AbsorbedChain,
    n_particles: usize,
    x0_law: &[(State, f64)],
    horizon: f64,
    snapshot_times: &[f64],
    rng: &SeededRng,
) -> Result<ParticleEnsemble, SimError> {
    if n_particles < 2 {
        return Err(SimError::InvalidInput("Fleming–Viot needs at least two particles".into()));
    }
    if x0_law.is_empty() || x0_law.iter().any(|e| !(e.1 >= 0.0)) || x0_law.iter().all(|e| e.1 == 0.0) {
        return Err(SimError::InvalidInput("initial law must have nonnegative weights and positive mass".into()));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SimError::InvalidInput(format!("horizon {horizon} must be finite and nonnegative")));
    }
    for (x, _) in x0_law {
        chain.check_dim(x)?;
    }
    let mut g = rng.generator();
    let mut particles: Vec<State> = (0..n_particles).map(|_| sample_law(x0_law, &mut g)).collect();
    let mut pending: Vec<Option<Target>> = vec![None; n_particles];
    let mut heap = BinaryHeap::with_capacity(n_particles);
    for i in 0..n_particles {
        if let Some((hold, target)) = next_jump(chain, &particles[i], &mut g)? {
            pending[i] = Some(target);
            heap.push(Clock(hold, i));
        }
    }
    let mut stops: Vec<f64> = snapshot_times.iter().copied().filter(|&t| t <= horizon).collect();
    stops.sort_by(f64::total_cmp);
    let mut next_stop = 0;
    let mut snapshots = Vec::with_capacity(stops.len());
    let mut resamplings = Vec::new();
    let mut now = 0.0;
    while let Some(Clock(t, i)) = heap.pop() {
        while next_stop < stops.len() && stops[next_stop] < t {
            snapshots.push(Snapshot { time: stops[next_stop], particles: particles.clone() });
            next_stop += 1;
        }
        if t >= horizon {
            break;
        }
        assert!(t > now || (t == now && now == 0.0), "event times must increase");
        now = t;
        match pending[i].take().expect("scheduled particle has a pending jump") {
            Target::State(y) => particles[i] = y,
            Target::Absorbed => {
                let k = g.gen_range(0..n_particles - 1);
                let source = if k >= i { k + 1 } else { k };
                particles[i] = particles[source].clone();
                resamplings.push(Resampling { time: t, particle: i, source });
            }
        }
        if let Some((hold, target)) = next_jump(chain, &particles[i], &mut g)? {
            pending[i] = Some(target);
            heap.push(Clock(t + hold, i));
        }
    }
    while next_stop < stops.len() {
        snapshots.push(Snapshot { time: stops[next_stop], particles: particles.clone() });
        next_stop += 1;
    }
    Ok(ParticleEnsemble { snapshots, resamplings, last: Snapshot { time: horizon, particles } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn resampling_is_logged_and_never_self() {
        let m = presets::two_state();
        let law = [(State::one(1).unwrap(), 1.0)];
        let e = fleming_viot(&m, 2, &law, 20.0, &[], &SeededRng::new(3)).unwrap();
        assert!(!e.resamplings.is_empty());
        assert!(e.resamplings.iter().all(|r| r.particle != r.source));
        assert!(e.resamplings.windows(2).all(|w| w[0].time < w[1].time));
        assert_eq!(e.last.particles.len(), 2);
    }

    #[test]
    fn rejects_single_particle() {
        let law = [(State::one(1).unwrap(), 1.0)];
        assert!(fleming_viot(&presets::two_state(), 1, &law, 1.0, &[], &SeededRng::new(0)).is_err());
    }
}
