//! Exact spectral analysis of quantum-enhanced Markov chain Monte Carlo.
//!
//! A classical spin model over `N` spins is quenched under the transverse-field
//! Hamiltonian `H = H_c + h Σ σ^x`; measuring the evolved basis state gives a
//! symmetric proposal `Q`, which a Metropolis–Hastings step turns into a
//! reversible chain `P`. This crate builds every object in that pipeline over
//! the full `2^N` configuration space and evaluates exact gaps alongside the
//! bottleneck bounds that constrain them:
//!
//! * [`models`]: Ising chain, Sherrington–Kirkpatrick and p-spin Hamiltonians,
//!   seeded disorder, Boltzmann tables.
//! * [`quench`]: dense quench Hamiltonians, eigendecomposition, finite-time and
//!   long-time proposals, IPR, perturbative and large-field proposals.
//! * [`chain`]: Metropolis acceptance, transition matrices, spectral gaps,
//!   mixing-time bounds, time-averaged chains.
//! * [`bottleneck`]: equilibrium flow, conductance over cuts and the
//!   eigenstate-overlap bound ladder.
//! * [`ising_analytic`]: the free-fermion closed form of the Ising-chain
//!   bottleneck bound, finite `N` and continuum.
//! * [`scaling`]: exponential scaling fits `2^{-kN}`.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x >= 0.0)` guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bottleneck;
pub mod chain;
pub mod disorder;
mod error;
pub mod ising_analytic;
pub mod linalg;
pub mod models;
pub mod quench;
pub mod scaling;
pub mod spin;

pub use error::{Error, Result};

/// Largest spin count accepted by dense constructions unless overridden.
pub const DEFAULT_MAX_SPINS: usize = 14;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
