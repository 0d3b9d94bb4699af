use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{domain, structural, Result};
use crate::linalg::{CVector, C0};

/// Tolerance on `| ||psi|| - 1 |` for a vector to count as a state.
pub const NORM_TOL: f64 = 1e-10;

/// Unit-norm vector of dimension `2^N` in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps `amplitudes`, failing unless the norm is 1 within [`NORM_TOL`].
    pub fn new(n_sites: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != 1usize << n_sites {
            return Err(structural(format!(
                "state of length {} for {n_sites} sites",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("state has norm {norm}, expected 1")));
        }
        Ok(Self {
            n_sites,
            amplitudes,
        })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(n_sites: usize, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(domain("cannot normalize a zero or non-finite vector"));
        }
        Self::new(n_sites, amplitudes / Complex64::new(norm, 0.0))
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_sites: usize, index: usize) -> Self {
        let mut v = DVector::from_element(1usize << n_sites, C0);
        v[index] = Complex64::new(1.0, 0.0);
        Self {
            n_sites,
            amplitudes: v,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}
