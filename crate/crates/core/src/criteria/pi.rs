use crate::model::{AbsorbedChain, BdcModel};

use super::CriteriaError;

/// Tabulated `π_k = (b_1⋯b_{k-1}) / (d_1⋯d_k)` and `u_n = 1/(d_n π_n)` for
/// `k, n ≤ bound` (capped at the model capacity), stored as logarithms.
///
/// The recurrence `π_{k+1} = π_k b_k / d_{k+1}` holds for every `k ≥ 1`. With
/// this normalization `π_1 = 1/d_1`; every quantity built from `π` is
/// invariant under a common rescaling.
#[derive(Clone, Debug)]
pub struct PiWeights {
    log_pi: Vec<f64>,
    log_d: Vec<f64>,
}

impl PiWeights {
    pub fn new(model: &BdcModel, bound: u64) -> Result<Self, CriteriaError> {
        if bound == 0 {
            return Err(CriteriaError::InvalidParameter("bound must be at least 1".into()));
        }
        let bound = model.capacity().map_or(bound, |c| bound.min(c));
        let mut log_pi = Vec::with_capacity(bound as usize);
        let mut log_d = Vec::with_capacity(bound as usize);
        let d1 = model.death(1);
        if d1.is_nan() || d1 <= 0.0 {
            return Err(CriteriaError::InvalidModel(format!("d_1 = {d1}; the weights need d_1 > 0")));
        }
        log_d.push(d1.ln());
        log_pi.push(-d1.ln());
        for k in 1..bound {
            let b = model.birth(k);
            let d = model.death(k + 1);
            if d.is_nan() || d <= 0.0 || b.is_nan() || b < 0.0 {
                return Err(CriteriaError::InvalidModel(format!(
                    "b_{k} = {b}, d_{} = {d}; the weights need b_k ≥ 0 and d_k > 0",
                    k + 1
                )));
            }
            let prev = *log_pi.last().expect("nonempty");
            log_pi.push(prev + b.ln() - d.ln());
            log_d.push(d.ln());
        }
        Ok(PiWeights { log_pi, log_d })
    }

    pub fn bound(&self) -> u64 {
        self.log_pi.len() as u64
    }

    pub fn log_pi(&self, k: u64) -> f64 {
        self.log_pi[(k - 1) as usize]
    }

    pub fn pi(&self, k: u64) -> f64 {
        self.log_pi(k).exp()
    }

    pub fn log_u(&self, n: u64) -> f64 {
        -self.log_d[(n - 1) as usize] - self.log_pi(n)
    }

    pub fn u(&self, n: u64) -> f64 {
        self.log_u(n).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn logistic_unit_coefficients() {
        let w = PiWeights::new(&presets::logistic(1.0, 1.0, 1.0), 10).unwrap();
        assert!((w.pi(1) - 1.0).abs() < 1e-15);
        assert!((w.pi(2) - 0.25).abs() < 1e-15);
        assert!((w.u(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recurrence_holds() {
        let m = presets::logistic(3.0, 0.7, 0.2);
        let w = PiWeights::new(&m, 200).unwrap();
        for k in 1..200 {
            let lhs = w.log_pi(k + 1) + m.death(k + 1).ln();
            let rhs = w.log_pi(k) + m.birth(k).ln();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn rejects_vanishing_death() {
        assert!(PiWeights::new(&presets::two_state(), 5).is_err());
    }
}
