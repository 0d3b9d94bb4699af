use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::pauli::{product_phase, symplectic_commutes, PauliString};
use crate::error::{domain, structural, Error, Result};

/// Coefficients with magnitude below this are dropped after every arithmetic operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Largest register for which dense `2^N x 2^N` matrices are built.
pub const DENSE_SITE_LIMIT: usize = 13;

/// Hermitian operator `sum_P c_P P` with real coefficients over Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    n_sites: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl OperatorSum {
    pub fn zero(n_sites: usize) -> Self {
        assert!(n_sites >= 1, "operators need at least one site");
        Self {
            n_sites,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_sites: usize) -> Self {
        Self::from_terms(n_sites, [(PauliString::identity(n_sites), 1.0)]).unwrap()
    }

    pub fn from_terms(
        n_sites: usize,
        terms: impl IntoIterator<Item = (PauliString, f64)>,
    ) -> Result<Self> {
        let mut op = Self::zero(n_sites);
        for (p, c) in terms {
            op.add_term(p, c)?;
        }
        op.prune();
        Ok(op)
    }

    pub fn single(p: PauliString, coeff: f64) -> Self {
        let mut op = Self::zero(p.n_sites());
        op.add_term(p, coeff).unwrap();
        op.prune();
        op
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, c)| (p, *c))
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Accumulates `coeff * p` without pruning.
    pub fn add_term(&mut self, p: PauliString, coeff: f64) -> Result<()> {
        if p.n_sites() != self.n_sites {
            return Err(structural(format!(
                "term {p} has {} sites, operator has {}",
                p.n_sites(),
                self.n_sites
            )));
        }
        if !coeff.is_finite() {
            return Err(domain(format!("non-finite coefficient {coeff} for {p}")));
        }
        *self.terms.entry(p).or_insert(0.0) += coeff;
        Ok(())
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= PRUNE_THRESHOLD);
    }

    fn check_same_size(&self, other: &Self, what: &str) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(structural(format!(
                "{what}: operators act on {} and {} sites",
                self.n_sites, other.n_sites
            )));
        }
        Ok(())
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Result<Self> {
        self.check_same_size(other, "sum")?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            *out.terms.entry(*p).or_insert(0.0) += scale * c;
        }
        out.prune();
        Ok(out)
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= scale;
        }
        out.prune();
        out
    }

    /// Coefficient-space inner product, equal to `Tr(A B) / 2^N`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_size(other, "inner product")?;
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        Ok(small.terms.iter().map(|(p, c)| c * large.coeff(p)).sum())
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Every stored string has an even number of `Y`s, so the dense matrix is real symmetric.
    pub fn is_real(&self) -> bool {
        self.terms.keys().all(|p| p.y_count() % 2 == 0)
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|p| p.x_mask() == 0)
    }

    /// Hermitian commutator `-i [A, B]`.
    ///
    /// With this convention the skew-Hermitian element `i * result` equals `[A, B] = -[iA, iB]`;
    /// every Lie-algebra routine in the crate uses it, and spans are unaffected by the sign.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same_size(other, "commutator")?;
        let mut out = Self::zero(self.n_sites);
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let (xa, za, xb, zb) = (pa.x_mask(), pa.z_mask(), pb.x_mask(), pb.z_mask());
                if symplectic_commutes(xa, za, xb, zb) {
                    continue;
                }
                // [P, Q] = 2 P Q = 2 i^k R with k odd, so -i [P,Q] = 2 i^{k-1} R is real.
                let k = product_phase(xa, za, xb, zb);
                let sign = if k == 1 { 2.0 } else { -2.0 };
                let r = PauliString::from_masks(self.n_sites, xa ^ xb, za ^ zb);
                *out.terms.entry(r).or_insert(0.0) += sign * ca * cb;
            }
        }
        out.prune();
        Ok(out)
    }

    /// Product `A B` as a complex combination of Pauli strings (not generally Hermitian).
    pub fn product_terms(&self, other: &Self) -> Result<BTreeMap<PauliString, Complex64>> {
        self.check_same_size(other, "product")?;
        let mut out: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let k = product_phase(pa.x_mask(), pa.z_mask(), pb.x_mask(), pb.z_mask());
                let r = PauliString::from_masks(
                    self.n_sites,
                    pa.x_mask() ^ pb.x_mask(),
                    pa.z_mask() ^ pb.z_mask(),
                );
                let phase = super::pauli::Phase::from_power(k).to_complex();
                *out.entry(r).or_insert(Complex64::new(0.0, 0.0)) += phase * (ca * cb);
            }
        }
        Ok(out)
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_sites > DENSE_SITE_LIMIT {
            return Err(Error::Capacity {
                what: "dense operator size (sites)".into(),
                limit: DENSE_SITE_LIMIT,
                reached: self.n_sites,
            });
        }
        Ok(())
    }

    /// Dense complex matrix in the computational basis (site 0 is the leftmost tensor factor).
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.check_dense()?;
        let d = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (p, c) in &self.terms {
            for b in 0..d {
                let (row, phase) = p.act_on_basis(b);
                m[(row, b)] += phase.to_complex() * *c;
            }
        }
        Ok(m)
    }

    /// Dense real symmetric matrix; fails unless [`is_real`](Self::is_real).
    pub fn to_dense_real(&self) -> Result<DMatrix<f64>> {
        self.check_dense()?;
        if !self.is_real() {
            return Err(structural(
                "operator has an odd number of Y letters in some term",
            ));
        }
        let d = self.dim();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (p, c) in &self.terms {
            for b in 0..d {
                let (row, phase) = p.act_on_basis(b);
                // Even Y count gives phase +-1.
                let s = if phase.power() == 0 { 1.0 } else { -1.0 };
                m[(row, b)] += s * c;
            }
        }
        Ok(m)
    }

    /// Diagonal of a z-diagonal operator as a real vector.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        self.check_dense()?;
        if !self.is_diagonal() {
            return Err(structural(
                "operator is not diagonal in the computational basis",
            ));
        }
        let d = self.dim();
        let mut diag = vec![0.0; d];
        for (p, c) in &self.terms {
            for (b, v) in diag.iter_mut().enumerate() {
                let sign = if (p.z_mask() & b as u64).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                *v += sign * c;
            }
        }
        Ok(diag)
    }

    /// `y = A x` without forming the dense matrix.
    pub fn apply(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if x.len() != self.dim() {
            return Err(structural(format!(
                "vector of length {} applied to operator of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let mut y = DVector::<Complex64>::zeros(x.len());
        for (p, c) in &self.terms {
            for (b, xb) in x.iter().enumerate() {
                let (row, phase) = p.act_on_basis(b);
                y[row] += phase.to_complex() * (*xb * *c);
            }
        }
        Ok(y)
    }

    /// Pauli decomposition of a Hermitian matrix: `c_P = Re Tr(P M) / 2^N`.
    ///
    /// The anti-Hermitian part, if any, is discarded.
    pub fn from_dense(n_sites: usize, m: &DMatrix<Complex64>) -> Result<Self> {
        let d = 1usize << n_sites;
        if m.nrows() != d || m.ncols() != d {
            return Err(structural(format!(
                "matrix is {}x{}, expected {d}x{d}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut out = Self::zero(n_sites);
        for index in 0..d * d {
            let p = PauliString::from_index(n_sites, index);
            let mut tr = Complex64::new(0.0, 0.0);
            for b in 0..d {
                let (row, phase) = p.act_on_basis(b);
                // (P)_{row,b} = phase, so Tr(P M) = sum_b P_{row,b} M_{b,row}.
                tr += phase.to_complex() * m[(b, row)];
            }
            let c = tr.re / d as f64;
            if c.abs() >= PRUNE_THRESHOLD {
                out.terms.insert(p, c);
            }
        }
        Ok(out)
    }

    /// Cyclic site relabeling `k -> k + shift`.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut out = Self::zero(self.n_sites);
        for (p, c) in &self.terms {
            out.terms.insert(p.rotated(shift), *c);
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    pauli: String,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct OperatorRecord {
    n_sites: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for OperatorSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorRecord {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|(p, c)| TermRecord {
                    pauli: p.to_string(),
                    coeff: *c,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = OperatorRecord::deserialize(deserializer)?;
        if rec.n_sites == 0 {
            return Err(D::Error::custom("n_sites must be at least 1"));
        }
        let mut op = OperatorSum::zero(rec.n_sites);
        for t in rec.terms {
            let p: PauliString = t.pauli.parse().map_err(D::Error::custom)?;
            op.add_term(p, t.coeff).map_err(D::Error::custom)?;
        }
        op.prune();
        Ok(op)
    }
}
