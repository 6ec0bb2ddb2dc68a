//! Absorbed continuous-time chains on `ℕ` and `ℕ^r`.
//!
//! Two families are supported:
//!
//! * [`BdcModel`]: one-dimensional birth and death chains with catastrophes.
//!   From `k` the chain jumps to `k+1` at rate `b_k`, to `k-1` at rate `d_k`
//!   (for `k ≥ 2`) and to the cemetery `∂` at rate `a_k`, except from `k = 1`
//!   where the death and the catastrophe both lead to `∂` (rate `a_1 + d_1`).
//! * [`MultiTypeModel`]: multi-type birth and death chains, either with the
//!   competitive Lotka–Volterra parametrisation where a death of the last
//!   individual of a type is folded into the absorption rate, or with rates
//!   given directly.
//!
//! Rates are user callables. Every model is immutable after construction and
//! can be shared across threads.

mod bdc;
mod expr;
pub mod file;
mod multitype;
pub mod presets;
mod state;
mod validate;

use std::sync::Arc;

use thiserror::Error;

pub use bdc::BdcModel;
pub use expr::Expr;
pub use file::{load_model_file, parse_model_str, CheckSettings, ModelFile, ModelFileError, ModelKind, ModelSpec};
pub use multitype::{CompetitiveRates, MultiTypeModel, MultiTypeRates, PlainRates};
pub use state::{Lattice, State};
pub use validate::{validate, CoefficientBounds, ValidationIssue, ValidationReport};

/// Rate depending on a one-dimensional index `k ≥ 1`.
pub type SeqFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
/// Rate depending on the coordinates of a multi-type state.
pub type StateFn = Arc<dyn Fn(&[u32]) -> f64 + Send + Sync>;
/// Pairwise coefficient `c_ij(x)` with zero-based type indices.
pub type PairFn = Arc<dyn Fn(usize, usize, &[u32]) -> f64 + Send + Sync>;

pub fn seq_fn(f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> SeqFn {
    Arc::new(f)
}

pub fn state_fn(f: impl Fn(&[u32]) -> f64 + Send + Sync + 'static) -> StateFn {
    Arc::new(f)
}

pub fn pair_fn(f: impl Fn(usize, usize, &[u32]) -> f64 + Send + Sync + 'static) -> PairFn {
    Arc::new(f)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("{what} at {state} is negative ({value})")]
    NegativeRate { what: String, state: State, value: f64 },
    #[error("{what} at {state} is not finite ({value})")]
    NonFiniteRate { what: String, state: State, value: f64 },
    #[error("state {state} has dimension {got}, model expects {expected}")]
    DimensionMismatch { state: State, got: usize, expected: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Destination of a jump.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    State(State),
    Absorbed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub target: Target,
    pub rate: f64,
}

/// Nonzero outgoing rates from one state. All absorption channels are merged
/// into a single [`Target::Absorbed`] entry, listed last.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionList {
    pub transitions: Vec<Transition>,
    pub total_rate: f64,
}

impl TransitionList {
    pub(crate) fn build(entries: Vec<(Target, f64)>) -> Self {
        let mut transitions = Vec::with_capacity(entries.len());
        let mut absorbed = 0.0;
        for (target, rate) in entries {
            if rate <= 0.0 {
                continue;
            }
            match target {
                Target::Absorbed => absorbed += rate,
                t => transitions.push(Transition { target: t, rate }),
            }
        }
        if absorbed > 0.0 {
            transitions.push(Transition { target: Target::Absorbed, rate: absorbed });
        }
        let total_rate = transitions.iter().map(|t| t.rate).sum();
        TransitionList { transitions, total_rate }
    }

    /// Rate of the jump to `∂` (zero when there is none).
    pub fn absorption_rate(&self) -> f64 {
        self.transitions
            .iter()
            .filter(|t| t.target == Target::Absorbed)
            .map(|t| t.rate)
            .sum()
    }

    pub fn rate_to(&self, y: &State) -> f64 {
        self.transitions
            .iter()
            .filter(|t| matches!(&t.target, Target::State(s) if s == y))
            .map(|t| t.rate)
            .sum()
    }
}

pub(crate) fn checked_rate(what: &str, x: &State, value: f64) -> Result<f64, ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NonFiniteRate { what: what.to_string(), state: x.clone(), value });
    }
    if value < 0.0 {
        return Err(ModelError::NegativeRate { what: what.to_string(), state: x.clone(), value });
    }
    Ok(value)
}

/// A chain on `E ∪ {∂}` described by its jump rates.
pub trait AbsorbedChain: Send + Sync {
    /// Number of types `r` (1 for one-dimensional chains).
    fn dim(&self) -> usize;

    /// All nonzero outgoing rates from `x`.
    fn transitions_from(&self, x: &State) -> Result<TransitionList, ModelError>;

    /// States beyond which the chain never goes, if any.
    fn capacity(&self) -> Option<u64> {
        None
    }

    fn check_dim(&self, x: &State) -> Result<(), ModelError> {
        if x.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                state: x.clone(),
                got: x.dim(),
                expected: self.dim(),
            });
        }
        Ok(())
    }
}

/// Either model family, as loaded from a model file.
#[derive(Clone)]
pub enum RateModel {
    Bdc(BdcModel),
    MultiType(MultiTypeModel),
}

impl RateModel {
    pub fn name(&self) -> &str {
        match self {
            RateModel::Bdc(m) => m.name(),
            RateModel::MultiType(m) => m.name(),
        }
    }

    pub fn as_chain(&self) -> &dyn AbsorbedChain {
        match self {
            RateModel::Bdc(m) => m,
            RateModel::MultiType(m) => m,
        }
    }
}

impl AbsorbedChain for RateModel {
    fn dim(&self) -> usize {
        self.as_chain().dim()
    }

    fn transitions_from(&self, x: &State) -> Result<TransitionList, ModelError> {
        self.as_chain().transitions_from(x)
    }

    fn capacity(&self) -> Option<u64> {
        self.as_chain().capacity()
    }
}

impl From<BdcModel> for RateModel {
    fn from(m: BdcModel) -> Self {
        RateModel::Bdc(m)
    }
}

impl From<MultiTypeModel> for RateModel {
    fn from(m: MultiTypeModel) -> Self {
        RateModel::MultiType(m)
    }
}
