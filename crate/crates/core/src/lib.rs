//! Symmetry-based reachability analysis for analog variational quantum eigensolvers.
//!
//! The crate builds the Rydberg-ring resource Hamiltonians, generates their dynamical Lie
//! algebra, decomposes the Hilbert space into invariant subspaces of the resource set, and checks
//! whether an initial state and a target ground space can be connected at all. Variational and
//! adiabatic simulations corroborate the verdicts.

pub mod adiabatic;
pub mod error;
pub mod lie;
pub mod linalg;
pub mod operators;
pub mod reachability;
pub mod rep;
pub mod state;
pub mod vqe;

pub use error::{Error, Result};
pub use state::StateVector;
