//! Dynamical Lie algebras of Hamiltonian sets.

mod center;
mod closure;
mod decomposition;
mod symmetry;

pub use center::{
    center_basis, center_dimension_fast, simulability_check, simulability_check_with, Simulability,
    CENTER_RANK_TOL,
};
pub use closure::{lie_closure, lie_closure_with, ClosureDiagnostics, ClosureOptions, LieBasis};
pub use decomposition::{
    is_simple_signature, reductive_decomposition, reductive_decomposition_seeded, Component,
    IdealBases, ReductiveDecomposition, DEFAULT_DECOMPOSITION_SEED,
};
