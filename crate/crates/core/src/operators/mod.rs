//! Pauli-string algebra and the Hamiltonians of the Rydberg ring simulator.
//!
//! The resource set `{H_d, H_Omega, H_Delta}` models globally driven atoms on a ring with
//! van der Waals drift; the target Hamiltonians are the periodic Ising and Heisenberg chains and
//! the three-qubit adiabatic examples.

mod pauli;
mod sum;

use std::f64::consts::PI;

pub use pauli::{pauli_product, Pauli, PauliString, Phase, MAX_SITES};
pub use sum::{OperatorSum, DENSE_SITE_LIMIT, PRUNE_THRESHOLD};

pub(crate) mod pauli_internals {
    pub(crate) use super::pauli::{product_phase, symplectic_commutes};
}

use crate::error::{domain, Result};

/// Atoms placed equidistantly on a circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingGeometry {
    pub n_sites: usize,
    pub c6: f64,
    /// Distance between neighbouring atoms.
    pub nn_distance: f64,
}

impl RingGeometry {
    /// Unit `C6` and unit nearest-neighbour spacing, so the nearest-neighbour coupling is 1.
    pub fn unit(n_sites: usize) -> Self {
        Self {
            n_sites,
            c6: 1.0,
            nn_distance: 1.0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.nn_distance / (2.0 * (PI / self.n_sites as f64).sin())
    }

    /// Chord length between sites `a` and `b`.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let d = a.abs_diff(b) % self.n_sites;
        let sep = d.min(self.n_sites - d) as f64;
        2.0 * self.radius() * (PI * sep / self.n_sites as f64).sin()
    }

    /// Van der Waals coupling `C6 / |R_a - R_b|^6`.
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.c6 / self.distance(a, b).powi(6)
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(domain(format!(
                "ring needs at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if self.n_sites > MAX_SITES {
            return Err(domain(format!(
                "ring of {} sites exceeds {MAX_SITES}",
                self.n_sites
            )));
        }
        if !(self.c6.is_finite() && self.c6 > 0.0) {
            return Err(domain(format!("C6 must be positive, got {}", self.c6)));
        }
        if !(self.nn_distance.is_finite() && self.nn_distance > 0.0) {
            return Err(domain(format!(
                "spacing must be positive, got {}",
                self.nn_distance
            )));
        }
        Ok(())
    }
}

/// Drift, drive and detuning Hamiltonians of the globally controlled ring.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceSet {
    /// `sum_{n<m} C6/|R_n - R_m|^6 Z_n Z_m`.
    pub drift: OperatorSum,
    /// `sum_n X_n`.
    pub omega: OperatorSum,
    /// `sum_n Z_n`.
    pub delta: OperatorSum,
}

impl ResourceSet {
    pub fn n_sites(&self) -> usize {
        self.drift.n_sites()
    }

    /// Generators in the fixed order `[H_d, H_Omega, H_Delta]`.
    pub fn to_vec(&self) -> Vec<OperatorSum> {
        vec![self.drift.clone(), self.omega.clone(), self.delta.clone()]
    }

    /// Layer Hamiltonian `omega H_Omega - delta H_Delta + H_d`.
    pub fn layer_hamiltonian(&self, omega: f64, delta: f64) -> OperatorSum {
        self.drift
            .add_scaled(&self.omega, omega)
            .and_then(|h| h.add_scaled(&self.delta, -delta))
            .expect("resource operators share a register")
    }
}

fn uniform_single_site(n: usize, p: Pauli, coeff: f64) -> OperatorSum {
    OperatorSum::from_terms(n, (0..n).map(|s| (PauliString::single(n, s, p), coeff)))
        .expect("sites within register")
}

fn two_site(n: usize, a: usize, b: usize, p: Pauli) -> PauliString {
    PauliString::single(n, a, p).with(b, p)
}

/// Sum of `p_n p_{n+1}` over the ring bonds, with periodic wrap-around.
fn ring_bonds(n: usize, p: Pauli, coeff: f64) -> OperatorSum {
    OperatorSum::from_terms(n, (0..n).map(|s| (two_site(n, s, (s + 1) % n, p), coeff)))
        .expect("sites within register")
}

/// Builds `{H_d, H_Omega, H_Delta}` for the ring.
pub fn build_resource_set(geom: &RingGeometry) -> Result<ResourceSet> {
    geom.validate()?;
    let n = geom.n_sites;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            pairs.push((two_site(n, a, b, Pauli::Z), geom.coupling(a, b)));
        }
    }
    Ok(ResourceSet {
        drift: OperatorSum::from_terms(n, pairs)?,
        omega: uniform_single_site(n, Pauli::X, 1.0),
        delta: uniform_single_site(n, Pauli::Z, 1.0),
    })
}

fn check_ring(n: usize) -> Result<()> {
    if n < 3 {
        return Err(domain(format!(
            "periodic chain needs at least 3 sites, got {n}"
        )));
    }
    if n > MAX_SITES {
        return Err(domain(format!("chain of {n} sites exceeds {MAX_SITES}")));
    }
    Ok(())
}

/// Periodic Ising chain in a transverse and longitudinal field:
/// `omega sum X_n - delta sum Z_n + j sum Z_n Z_{n+1}`.
pub fn build_ising(n: usize, omega: f64, delta: f64, j: f64) -> Result<OperatorSum> {
    check_ring(n)?;
    uniform_single_site(n, Pauli::X, omega)
        .add_scaled(&uniform_single_site(n, Pauli::Z, 1.0), -delta)?
        .add_scaled(&ring_bonds(n, Pauli::Z, 1.0), j)
}

/// Periodic isotropic Heisenberg chain in a field: `h sum Z_n + j sum_{a=x,y,z} a_n a_{n+1}`.
pub fn build_heisenberg(n: usize, h: f64, j: f64) -> Result<OperatorSum> {
    check_ring(n)?;
    let mut op = uniform_single_site(n, Pauli::Z, h);
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        op = op.add_scaled(&ring_bonds(n, p, 1.0), j)?;
    }
    Ok(op)
}

/// Parent Hamiltonian and targets of the three-qubit adiabatic examples.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticExamples {
    /// `1/2 sum Z_n`.
    pub h0: OperatorSum,
    /// `h0 + 1/4` Heisenberg exchange on the ring; commutes with `h0`.
    pub h1: OperatorSum,
    /// `h1 + X_1 / 20`.
    pub h2: OperatorSum,
    /// `h2 + Z_2 / 20`.
    pub h3: OperatorSum,
}

/// Parent Hamiltonian `1/2 sum Z_n` of the adiabatic examples, for any register size.
pub fn build_parent_hamiltonian(n: usize) -> OperatorSum {
    uniform_single_site(n, Pauli::Z, 0.5)
}

pub fn build_adiabatic_examples(n: usize) -> Result<AdiabaticExamples> {
    if n != 3 {
        return Err(domain(format!(
            "the adiabatic examples are defined for 3 qubits, got {n}"
        )));
    }
    let h0 = build_parent_hamiltonian(n);
    let mut h1 = h0.clone();
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        h1 = h1.add_scaled(&ring_bonds(n, p, 1.0), 0.25)?;
    }
    let h2 = h1.add_scaled(
        &OperatorSum::single(PauliString::single(n, 0, Pauli::X), 1.0),
        0.05,
    )?;
    let h3 = h2.add_scaled(
        &OperatorSum::single(PauliString::single(n, 1, Pauli::Z), 1.0),
        0.05,
    )?;
    Ok(AdiabaticExamples { h0, h1, h2, h3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn zz(n: usize, a: usize, b: usize) -> PauliString {
        two_site(n, a, b, Pauli::Z)
    }

    #[test]
    fn square_ring_couplings() {
        let set = build_resource_set(&RingGeometry::unit(4)).unwrap();
        assert!((set.drift.coeff(&zz(4, 0, 1)) - 1.0).abs() < 1e-12);
        assert!((set.drift.coeff(&zz(4, 0, 2)) - 0.125).abs() < 1e-12);
        assert_eq!(set.drift.len(), 6);
    }

    #[test]
    fn triangle_couplings_equal() {
        let set = build_resource_set(&RingGeometry::unit(3)).unwrap();
        let c: Vec<f64> = set.drift.terms().map(|(_, c)| c).collect();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|v| (v - c[0]).abs() < 1e-12));
    }

    #[test]
    fn drift_commutes_with_detuning() {
        for n in 2..7 {
            let set = build_resource_set(&RingGeometry::unit(n)).unwrap();
            assert!(set.drift.commutator(&set.delta).unwrap().is_empty());
        }
    }

    #[test]
    fn resource_set_rejects_single_site() {
        assert!(matches!(
            build_resource_set(&RingGeometry::unit(1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ising_and_heisenberg_term_counts() {
        assert_eq!(build_ising(3, 1.0, 1.0, 1.0).unwrap().len(), 9);
        assert_eq!(build_heisenberg(3, 1.0, 1.0).unwrap().len(), 12);
        let pure = build_ising(5, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(pure.len(), 5);
        assert!(pure.terms().all(|(p, c)| p.weight() == 2 && c == 1.0));
        assert!(matches!(
            build_ising(2, 1.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            build_heisenberg(2, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn adiabatic_examples_structure() {
        let ex = build_adiabatic_examples(3).unwrap();
        assert!(ex.h0.commutator(&ex.h1).unwrap().is_empty());
        let d2 = ex.h2.add_scaled(&ex.h1, -1.0).unwrap();
        assert_eq!(d2.len(), 1);
        assert!(d2
            .terms()
            .all(|(p, c)| p.to_string() == "XII" && (c - 0.05).abs() < 1e-15));
        let d3 = ex.h3.add_scaled(&ex.h2, -1.0).unwrap();
        assert_eq!(d3.len(), 1);
        assert!(d3
            .terms()
            .all(|(p, c)| p.to_string() == "IZI" && (c - 0.05).abs() < 1e-15));
        assert!(build_adiabatic_examples(4).is_err());
    }
}
