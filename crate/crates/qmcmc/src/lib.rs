//! Experiment harness for exact quantum-enhanced MCMC studies: validated JSON
//! configs, seeded disorder ensembles, resumable parameter sweeps, scaling
//! fits and CSV/JSON outputs.

pub mod config;
mod error;
pub mod harness;
pub mod io;
pub mod output;
pub mod records;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
