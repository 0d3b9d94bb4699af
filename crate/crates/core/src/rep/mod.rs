//! Commutants and invariant-subspace decompositions of Hamiltonian sets.

mod commutant;
mod projectors;

pub use commutant::{
    commutant, commutant_of_matrices, commutant_seeded, Blocks, CommutantBasis,
    DEFAULT_COMMUTANT_SEED,
};
pub use projectors::{
    irreducible_split, isotypic_projectors, isotypic_projectors_of_matrices, reduce_block,
    reduce_matrix, state_support, IrreducibleBlock, IrreducibleSplit, IsotypicBlock,
    ProjectorTree, SidecarIndex, Support, CLUSTER_TOL, PROJECTOR_TOL,
};
