use num_complex::Complex64;
use serde::Serialize;

use super::closure::{lie_closure_with, ClosureOptions};
use crate::error::{structural, Result};
use crate::linalg::CMatrix;
use crate::operators::OperatorSum;
use crate::rep::{Blocks, CommutantBasis};

/// Singular values of the overlap matrix below this fraction of the largest count as zero.
pub const CENTER_RANK_TOL: f64 = 1e-9;
/// Overlap matrices whose largest singular value is below this are rank zero.
const ABS_FLOOR: f64 = 1e-12;

fn check_inputs(resource: &[OperatorSum], commutant: &CommutantBasis) -> Result<()> {
    if commutant.dimension() == 0 {
        return Err(structural("commutant is empty; it always contains the identity"));
    }
    if let Some(h) = resource.iter().find(|h| h.dim() != commutant.matrix_dim()) {
        return Err(structural(format!(
            "Hamiltonian of dimension {} for a commutant on {}",
            h.dim(),
            commutant.matrix_dim()
        )));
    }
    Ok(())
}

/// Overlaps `R_ij = Tr(C_i^dagger H_j)` with the orthonormal commutant basis.
fn overlaps(resource: &[OperatorSum], commutant: &CommutantBasis) -> Result<CMatrix> {
    let mut r = CMatrix::zeros(commutant.dimension(), resource.len());
    for (j, h) in resource.iter().enumerate() {
        let coeffs = commutant.coefficients(&h.to_dense()?);
        for (i, c) in coeffs.into_iter().enumerate() {
            r[(i, j)] = c;
        }
    }
    Ok(r)
}

fn complex_rank(r: &CMatrix) -> usize {
    if r.is_empty() {
        return 0;
    }
    let sv = r.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max < ABS_FLOOR {
        return 0;
    }
    sv.iter().filter(|&&s| s > CENTER_RANK_TOL * max).count()
}

/// Dimension of `Z(g) = C ∩ g` for `g` generated by `resource`, as the rank of the overlaps of the
/// generators with the commutant `C` of the same set.
///
/// The orthogonal projection of a generator onto `C` lies in `g` and commutes with it, and these
/// projections span the center.
pub fn center_dimension_fast(resource: &[OperatorSum], commutant: &CommutantBasis) -> Result<usize> {
    check_inputs(resource, commutant)?;
    Ok(complex_rank(&overlaps(resource, commutant)?))
}

/// Orthonormal basis (Pauli coefficients) of the center, from the generator projections onto
/// the commutant.
pub fn center_basis(resource: &[OperatorSum], commutant: &CommutantBasis) -> Result<Vec<OperatorSum>> {
    check_inputs(resource, commutant)?;
    let r = overlaps(resource, commutant)?;
    let rank = complex_rank(&r);
    // Projections of Hermitian generators are Hermitian, so real combinations of the columns of
    // `r` span the center; Gram-Schmidt under Re <a, b>.
    let scale = r.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut kept: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for col in r.column_iter() {
        let mut v = col.into_owned();
        for _ in 0..2 {
            for b in &kept {
                let c = b.dotc(&v).re;
                v -= b * Complex64::new(c, 0.0);
            }
        }
        let n = v.norm();
        if n > CENTER_RANK_TOL.sqrt() * scale.max(ABS_FLOOR) && kept.len() < rank {
            kept.push(v / Complex64::new(n, 0.0));
        }
    }
    let n_sites = resource
        .first()
        .map(|h| h.n_sites())
        .unwrap_or_else(|| commutant.matrix_dim().trailing_zeros() as usize);
    kept.iter()
        .map(|coeffs| {
            let mut blocks: Blocks = commutant.blocks(0).iter().map(|b| CMatrix::zeros(b.nrows(), b.ncols())).collect();
            for (i, &c) in coeffs.iter().enumerate() {
                for (acc, b) in blocks.iter_mut().zip(commutant.blocks(i)) {
                    *acc += b * c;
                }
            }
            let dense = commutant.expand(&blocks);
            let op = OperatorSum::from_dense(n_sites, &dense)?;
            let norm = op.norm();
            Ok(if norm > 0.0 { op.scaled(1.0 / norm) } else { op })
        })
        .collect()
}

/// Whether adding `target` to `resource` leaves the generated algebra unchanged.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Simulability {
    pub simulable: bool,
    pub dim_gap: usize,
    pub resource_dim: usize,
    pub extended_dim: usize,
}

pub fn simulability_check(resource: &[OperatorSum], target: &OperatorSum) -> Result<Simulability> {
    simulability_check_with(resource, target, &ClosureOptions::default())
}

pub fn simulability_check_with(
    resource: &[OperatorSum],
    target: &OperatorSum,
    opts: &ClosureOptions,
) -> Result<Simulability> {
    let base = lie_closure_with(resource, opts)?;
    let ext = base.extended(target, opts)?;
    Ok(Simulability {
        simulable: ext.dim() == base.dim(),
        dim_gap: ext.dim() - base.dim(),
        resource_dim: base.dim(),
        extended_dim: ext.dim(),
    })
}
