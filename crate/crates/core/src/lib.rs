//! Quasi-stationary distributions of absorbed birth-death chains.

pub mod analysis;
pub mod criteria;
pub mod model;
pub mod numeric;
pub mod simulate;
pub mod spectral;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
