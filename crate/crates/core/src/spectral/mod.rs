//! Finite truncations of the generator, the QSD triple and exact evolution of
//! the conditioned law.

mod evolve;
mod export;
mod generator;
mod qsd;
mod sweep;

use thiserror::Error;

use crate::model::ModelError;

pub use evolve::{delta, evolve, evolve_from, evolve_times, ConditionalLaw, MAX_CHUNK_THETA};
pub use export::{write_spectral_csv, write_sweep_csv};
pub use generator::{truncate, TruncatedGenerator, STATE_BUDGET};
pub use qsd::{
    left_residual, qsd_solve, qsd_solve_with, right_residual, QsdOptions, SpectralResult, DEFAULT_MAX_ITER,
    UNIFORMIZATION_FACTOR,
};
pub use sweep::{truncation_sweep, tv_across, SweepRow};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("memory budget: {0}")]
    Budget(String),
    #[error("truncation is not irreducible")]
    Reducible,
    #[error("no state leads to the cemetery")]
    NoAbsorption,
    #[error("power iteration did not converge after {iterations} iterations (residuals {left_residual:.3e}, {right_residual:.3e})")]
    NotConverged { iterations: u64, left_residual: f64, right_residual: f64 },
    #[error("Poisson tail did not reach {tol:.3e} at parameter {theta}")]
    EvolveBudget { theta: f64, tol: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
