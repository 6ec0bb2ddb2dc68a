use std::fmt;

use super::{checked_rate, AbsorbedChain, ModelError, PairFn, State, StateFn, Target, TransitionList};

/// Competitive Lotka–Volterra coefficients. With `x ∈ ℕ^r`:
///
/// ```text
/// b_i(x) = β_i(x) x_i
/// d_i(x) = 1{x_i ≠ 1} (δ_i(x) x_i + c_ii(x) x_i (x_i - 1) + Σ_{j≠i} c_ij(x) x_i x_j)
/// a(x)   = α(x) + Σ_i 1{x_i = 1} (δ_i(x) + Σ_{j≠i} c_ij(x) x_j)
/// ```
///
/// The death of the last individual of a type is a jump to `∂`.
#[derive(Clone)]
pub struct CompetitiveRates {
    pub beta: Vec<StateFn>,
    pub delta: Vec<StateFn>,
    pub competition: PairFn,
    pub alpha: StateFn,
}

/// Rates given directly. A death `d_i(x)` with `x_i = 1` would leave `ℕ^r`
/// and is therefore counted as absorption.
#[derive(Clone)]
pub struct PlainRates {
    pub birth: Vec<StateFn>,
    pub death: Vec<StateFn>,
    pub catastrophe: StateFn,
}

#[derive(Clone)]
pub enum MultiTypeRates {
    Competitive(CompetitiveRates),
    Plain(PlainRates),
}

#[derive(Clone)]
pub struct MultiTypeModel {
    name: String,
    types: usize,
    rates: MultiTypeRates,
}

impl fmt::Debug for MultiTypeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.rates {
            MultiTypeRates::Competitive(_) => "competitive",
            MultiTypeRates::Plain(_) => "plain",
        };
        f.debug_struct("MultiTypeModel")
            .field("name", &self.name)
            .field("types", &self.types)
            .field("mode", &mode)
            .finish()
    }
}

impl MultiTypeModel {
    pub fn competitive(rates: CompetitiveRates) -> Result<Self, ModelError> {
        let r = rates.beta.len();
        if r == 0 || rates.delta.len() != r {
            return Err(ModelError::Invalid(format!(
                "need one birth and one death coefficient per type (got {} and {})",
                rates.beta.len(),
                rates.delta.len()
            )));
        }
        Ok(MultiTypeModel { name: "multitype".into(), types: r, rates: MultiTypeRates::Competitive(rates) })
    }

    pub fn plain(rates: PlainRates) -> Result<Self, ModelError> {
        let r = rates.birth.len();
        if r == 0 || rates.death.len() != r {
            return Err(ModelError::Invalid(format!(
                "need one birth and one death rate per type (got {} and {})",
                rates.birth.len(),
                rates.death.len()
            )));
        }
        Ok(MultiTypeModel { name: "multitype".into(), types: r, rates: MultiTypeRates::Plain(rates) })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn types(&self) -> usize {
        self.types
    }

    pub fn rates(&self) -> &MultiTypeRates {
        &self.rates
    }

    pub fn competitive_rates(&self) -> Option<&CompetitiveRates> {
        match &self.rates {
            MultiTypeRates::Competitive(c) => Some(c),
            MultiTypeRates::Plain(_) => None,
        }
    }

    /// `b_i(x)`, unchecked.
    pub fn birth_rate(&self, i: usize, x: &[u32]) -> f64 {
        match &self.rates {
            MultiTypeRates::Competitive(c) => (c.beta[i])(x) * f64::from(x[i]),
            MultiTypeRates::Plain(p) => (p.birth[i])(x),
        }
    }

    /// `d_i(x)`, unchecked. In competitive mode this includes the `1{x_i ≠ 1}`
    /// gate; in plain mode it is the raw user rate.
    pub fn death_rate(&self, i: usize, x: &[u32]) -> f64 {
        match &self.rates {
            MultiTypeRates::Competitive(c) => {
                if x[i] == 1 {
                    return 0.0;
                }
                let xi = f64::from(x[i]);
                let mut rate = (c.delta[i])(x) * xi + (c.competition)(i, i, x) * xi * (xi - 1.0);
                for (j, &xj) in x.iter().enumerate() {
                    if j != i {
                        rate += (c.competition)(i, j, x) * xi * f64::from(xj);
                    }
                }
                rate
            }
            MultiTypeRates::Plain(p) => (p.death[i])(x),
        }
    }

    /// `a(x)`, the total rate of the jump to `∂`, unchecked.
    pub fn absorption_rate(&self, x: &[u32]) -> f64 {
        match &self.rates {
            MultiTypeRates::Competitive(c) => {
                let mut a = (c.alpha)(x);
                for i in 0..x.len() {
                    if x[i] != 1 {
                        continue;
                    }
                    a += (c.delta[i])(x);
                    for (j, &xj) in x.iter().enumerate() {
                        if j != i {
                            a += (c.competition)(i, j, x) * f64::from(xj);
                        }
                    }
                }
                a
            }
            MultiTypeRates::Plain(p) => {
                let mut a = (p.catastrophe)(x);
                for i in 0..x.len() {
                    if x[i] == 1 {
                        a += (p.death[i])(x);
                    }
                }
                a
            }
        }
    }

    /// The catastrophe part of the absorption (`α` in competitive mode).
    pub fn catastrophe_rate(&self, x: &[u32]) -> f64 {
        match &self.rates {
            MultiTypeRates::Competitive(c) => (c.alpha)(x),
            MultiTypeRates::Plain(p) => (p.catastrophe)(x),
        }
    }
}

impl AbsorbedChain for MultiTypeModel {
    fn dim(&self) -> usize {
        self.types
    }

    fn transitions_from(&self, x: &State) -> Result<TransitionList, ModelError> {
        self.check_dim(x)?;
        let c = x.coords();
        let mut entries = Vec::with_capacity(2 * self.types + 1);
        for i in 0..self.types {
            let b = checked_rate(&format!("birth rate of type {}", i + 1), x, self.birth_rate(i, c))?;
            entries.push((Target::State(x.incremented(i)), b));
        }
        for i in 0..self.types {
            let d = checked_rate(&format!("death rate of type {}", i + 1), x, self.death_rate(i, c))?;
            if let Some(down) = x.decremented(i) {
                entries.push((Target::State(down), d));
            }
        }
        let a = checked_rate("absorption rate", x, self.absorption_rate(c))?;
        entries.push((Target::Absorbed, a));
        Ok(TransitionList::build(entries))
    }
}
