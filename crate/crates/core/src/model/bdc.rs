use std::fmt;
use std::sync::Arc;

use super::{checked_rate, AbsorbedChain, ModelError, SeqFn, State, Target, TransitionList};

/// Birth and death chain with catastrophes on `E = {1, 2, ...}`.
#[derive(Clone)]
pub struct BdcModel {
    name: String,
    birth: SeqFn,
    death: SeqFn,
    catastrophe: SeqFn,
    catastrophe_free: bool,
    capacity: Option<u64>,
}

impl fmt::Debug for BdcModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BdcModel")
            .field("name", &self.name)
            .field("catastrophe_free", &self.catastrophe_free)
            .field("capacity", &self.capacity)
            .finish()
    }
}

impl BdcModel {
    /// Chain without catastrophes (`a_k ≡ 0`).
    pub fn new(birth: SeqFn, death: SeqFn) -> Self {
        BdcModel {
            name: "bdc".into(),
            birth,
            death,
            catastrophe: Arc::new(|_| 0.0),
            catastrophe_free: true,
            capacity: None,
        }
    }

    pub fn with_catastrophe(mut self, catastrophe: SeqFn) -> Self {
        self.catastrophe = catastrophe;
        self.catastrophe_free = false;
        self
    }

    /// Declares that `b_capacity = 0`, so states above `capacity` are never
    /// reached.
    pub fn with_capacity(mut self, capacity: u64) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// True when the catastrophe rate was never set, i.e. `a ≡ 0` by construction.
    pub fn catastrophe_free(&self) -> bool {
        self.catastrophe_free
    }

    pub fn birth(&self, k: u64) -> f64 {
        (self.birth)(k)
    }

    pub fn death(&self, k: u64) -> f64 {
        (self.death)(k)
    }

    pub fn catastrophe(&self, k: u64) -> f64 {
        (self.catastrophe)(k)
    }

    pub fn birth_fn(&self) -> SeqFn {
        self.birth.clone()
    }

    pub fn death_fn(&self) -> SeqFn {
        self.death.clone()
    }

    pub fn catastrophe_fn(&self) -> SeqFn {
        self.catastrophe.clone()
    }

    /// Total rate of the jump to `∂` from `k`.
    pub fn absorption(&self, k: u64) -> f64 {
        if k == 1 {
            self.catastrophe(1) + self.death(1)
        } else {
            self.catastrophe(k)
        }
    }

    /// The same chain with catastrophes removed, whose generator is `L₀`.
    pub fn without_catastrophe(&self) -> BdcModel {
        BdcModel {
            name: format!("{}-no-catastrophe", self.name),
            birth: self.birth.clone(),
            death: self.death.clone(),
            catastrophe: Arc::new(|_| 0.0),
            catastrophe_free: true,
            capacity: self.capacity,
        }
    }
}

impl AbsorbedChain for BdcModel {
    fn dim(&self) -> usize {
        1
    }

    fn transitions_from(&self, x: &State) -> Result<TransitionList, ModelError> {
        self.check_dim(x)?;
        let k = u64::from(x.coords()[0]);
        let b = checked_rate("birth rate", x, self.birth(k))?;
        let d = checked_rate("death rate", x, self.death(k))?;
        let a = checked_rate("catastrophe rate", x, self.catastrophe(k))?;
        let mut entries = Vec::with_capacity(3);
        if b > 0.0 {
            entries.push((Target::State(x.incremented(0)), b));
        }
        match x.decremented(0) {
            Some(down) => {
                entries.push((Target::State(down), d));
                entries.push((Target::Absorbed, a));
            }
            None => entries.push((Target::Absorbed, a + d)),
        }
        Ok(TransitionList::build(entries))
    }

    fn capacity(&self) -> Option<u64> {
        self.capacity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, seq_fn};

    #[test]
    fn logistic_from_one() {
        // b_k = 2k, d_k = k + k(k-1), a ≡ 0
        let m = presets::logistic(2.0, 1.0, 1.0);
        let tl = m.transitions_from(&State::one(1).unwrap()).unwrap();
        assert_eq!(tl.transitions.len(), 2);
        assert_eq!(tl.rate_to(&State::one(2).unwrap()), 2.0);
        assert_eq!(tl.absorption_rate(), 1.0);
        assert_eq!(tl.total_rate, 3.0);
    }

    #[test]
    fn table_read_off_at_three() {
        let m = BdcModel::new(seq_fn(|k| 2.0 * k as f64), seq_fn(|k| 3.0 * k as f64))
            .with_catastrophe(seq_fn(|k| if k == 3 { 5.0 } else { 0.0 }));
        let tl = m.transitions_from(&State::one(3).unwrap()).unwrap();
        assert_eq!(tl.rate_to(&State::one(4).unwrap()), 6.0);
        assert_eq!(tl.rate_to(&State::one(2).unwrap()), 9.0);
        assert_eq!(tl.absorption_rate(), 5.0);
        assert_eq!(tl.total_rate, 20.0);
    }

    #[test]
    fn zero_rates_are_omitted() {
        let m = presets::two_state();
        let tl = m.transitions_from(&State::one(2).unwrap()).unwrap();
        assert_eq!(tl.transitions.len(), 1);
        assert_eq!(tl.rate_to(&State::one(1).unwrap()), 1.0);
    }

    #[test]
    fn rejects_bad_rates() {
        let m = BdcModel::new(seq_fn(|_| 1.0), seq_fn(|k| k as f64 - 5.0));
        let err = m.transitions_from(&State::one(3).unwrap()).unwrap_err();
        assert!(matches!(err, ModelError::NegativeRate { .. }));
        let m = BdcModel::new(seq_fn(|_| f64::NAN), seq_fn(|k| k as f64));
        assert!(matches!(
            m.transitions_from(&State::one(3).unwrap()).unwrap_err(),
            ModelError::NonFiniteRate { .. }
        ));
    }
}
