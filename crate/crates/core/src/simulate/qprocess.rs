use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{SeededRng, SimError, Trajectory};
use crate::model::State;
use crate::spectral::{SpectralResult, TruncatedGenerator};

/// The h-transformed generator `q̃_xy = q_xy η(y)/η(x)` on the retained states.
///
/// Jumps to `∂` disappear and `η` vanishes outside the truncation, so the
/// process never leaves the retained set.
pub struct QProcess<'a> {
    gen: &'a TruncatedGenerator,
    rows: Vec<Vec<(usize, f64)>>,
    totals: Vec<f64>,
}

impl<'a> QProcess<'a> {
    pub fn new(gen: &'a TruncatedGenerator, spectral: &SpectralResult) -> Result<Self, SimError> {
        let eta = &spectral.eta_fn;
        if eta.len() != gen.len() {
            return Err(SimError::InvalidInput("spectral result belongs to another truncation".into()));
        }
        if let Some(i) = eta.iter().position(|&v| !(v > 0.0)) {
            return Err(SimError::OutsideTruncation {
                state: gen.states()[i].clone(),
                hint: "eta_fn vanishes numerically there; increase N or the solver tolerance".into(),
            });
        }
        let rows: Vec<Vec<(usize, f64)>> = (0..gen.len())
            .map(|i| gen.row(i).map(|(j, q)| (j, q * eta[j] / eta[i])).filter(|e| e.1 > 0.0).collect())
            .collect();
        let totals = rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        Ok(QProcess { gen, rows, totals })
    }

    /// `q̃_xy`, zero when there is no such jump.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().filter(|e| e.0 == j).map(|e| e.1).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    fn start(&self, x0: &State) -> Result<usize, SimError> {
        self.gen.index_of(x0).ok_or_else(|| SimError::OutsideTruncation {
            state: x0.clone(),
            hint: "the initial state is not retained; increase N".into(),
        })
    }

    /// Runs until `horizon`, calling `visit(i, dt)` for every sojourn.
    fn walk<R: Rng + ?Sized>(&self, i0: usize, horizon: f64, rng: &mut R, mut visit: impl FnMut(usize, f64, f64)) {
        let mut t = 0.0;
        let mut i = i0;
        loop {
            let total = self.totals[i];
            let hold = if total > 0.0 { <Exp1 as Distribution<f64>>::sample(&Exp1, rng) / total } else { f64::INFINITY };
            if t + hold >= horizon {
                visit(i, t, horizon - t);
                return;
            }
            visit(i, t, hold);
            t += hold;
            let mut u = rng.gen::<f64>() * total;
            let row = &self.rows[i];
            let mut next = row[row.len() - 1].0;
            for &(j, q) in row {
                u -= q;
                if u < 0.0 {
                    next = j;
                    break;
                }
            }
            i = next;
        }
    }

    pub fn trajectory(&self, x0: &State, horizon: f64, rng: &SeededRng) -> Result<Trajectory, SimError> {
        let i0 = self.start(x0)?;
        let mut records = Vec::new();
        self.walk(i0, horizon, &mut rng.generator(), |i, t, _| records.push((t, self.gen.states()[i].clone())));
        Ok(Trajectory { records, absorption_time: None, horizon })
    }

    /// Fraction of `[0, horizon]` spent in each retained state.
    pub fn occupation(&self, x0: &State, horizon: f64, rng: &SeededRng) -> Result<Vec<f64>, SimError> {
        if !(horizon > 0.0) {
            return Err(SimError::InvalidInput(format!("horizon {horizon} must be positive")));
        }
        let i0 = self.start(x0)?;
        let mut occ = vec![0.0; self.gen.len()];
        self.walk(i0, horizon, &mut rng.generator(), |i, _, dt| occ[i] += dt);
        occ.iter_mut().for_each(|v| *v /= horizon);
        Ok(occ)
    }
}

/// Path of the chain conditioned never to be absorbed.
pub fn q_process_trajectory(
    gen: &TruncatedGenerator,
    spectral: &SpectralResult,
    x0: &State,
    horizon: f64,
    rng: &SeededRng,
) -> Result<Trajectory, SimError> {
    QProcess::new(gen, spectral)?.trajectory(x0, horizon, rng)
}
