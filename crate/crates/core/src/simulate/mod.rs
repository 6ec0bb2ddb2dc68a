//! Stochastic simulation of absorbed chains: exact paths, conditioned laws by
//! rejection and by interacting particles, and the Q-process.

mod conditional;
mod fleming_viot;
mod qprocess;
mod rng;
mod ssa;
mod trajectory;

use thiserror::Error;

use crate::model::{ModelError, State};

pub use conditional::{absorption_times, conditional_estimate, ConditionalEstimate};
pub use fleming_viot::{fleming_viot, ParticleEnsemble, Resampling, Snapshot};
pub use qprocess::{q_process_trajectory, QProcess};
pub use rng::SeededRng;
pub use ssa::{ssa_trajectory, ssa_with, state_at, Outcome};
pub use trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("total jump rate at {state} is not finite ({rate})")]
    RateOverflow { state: State, rate: f64 },
    #[error("state {state} is outside the truncation: {hint}")]
    OutsideTruncation { state: State, hint: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
