use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{structural, Error, Result};

/// Largest register size a [`PauliString`] can describe.
pub const MAX_SITES: usize = 32;

/// A single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Fourth root of unity `i^k`, the only phases that arise when multiplying Pauli strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u32 {
        self.0 as u32
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Tensor product of single-qubit Paulis on `n_sites` qubits.
///
/// Stored in symplectic form: site `k` corresponds to bit `n_sites - 1 - k` of the `x` and `z`
/// masks, which is also the bit of the computational-basis index that site `k` controls (site 0 is
/// the leftmost tensor factor). The operator is `i^{popcount(x & z)} X^x Z^z`, so every string is
/// Hermitian and `Y = i X Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_sites: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        assert!(
            (1..=MAX_SITES).contains(&n_sites),
            "unsupported register size {n_sites}"
        );
        Self {
            n_sites: n_sites as u8,
            x: 0,
            z: 0,
        }
    }

    pub fn from_masks(n_sites: usize, x: u64, z: u64) -> Self {
        assert!(
            (1..=MAX_SITES).contains(&n_sites),
            "unsupported register size {n_sites}"
        );
        let mask = full_mask(n_sites);
        assert!(
            x & !mask == 0 && z & !mask == 0,
            "mask exceeds register size"
        );
        Self {
            n_sites: n_sites as u8,
            x,
            z,
        }
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        let n = letters.len();
        if n == 0 || n > MAX_SITES {
            return Err(structural(format!(
                "Pauli string length {n} outside 1..={MAX_SITES}"
            )));
        }
        let mut s = Self::identity(n);
        for (site, p) in letters.iter().enumerate() {
            s = s.with(site, *p);
        }
        Ok(s)
    }

    /// `p` on `site`, identity elsewhere.
    pub fn single(n_sites: usize, site: usize, p: Pauli) -> Self {
        Self::identity(n_sites).with(site, p)
    }

    /// Returns a copy with the letter at `site` replaced.
    pub fn with(mut self, site: usize, p: Pauli) -> Self {
        assert!(site < self.n_sites(), "site {site} out of range");
        let bit = 1u64 << (self.n_sites() - 1 - site);
        let (bx, bz) = p.bits();
        self.x = if bx { self.x | bit } else { self.x & !bit };
        self.z = if bz { self.z | bit } else { self.z & !bit };
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, site: usize) -> Pauli {
        let bit = 1u64 << (self.n_sites() - 1 - site);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n_sites()).map(|s| self.letter(s)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Number of `Y` letters; the dense matrix is real iff this is even.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Dense coordinate index in `0..4^n`: `x | z << n`.
    pub fn index(&self) -> usize {
        (self.x | (self.z << self.n_sites)) as usize
    }

    pub fn from_index(n_sites: usize, index: usize) -> Self {
        let mask = full_mask(n_sites);
        Self::from_masks(
            n_sites,
            index as u64 & mask,
            (index as u64 >> n_sites) & mask,
        )
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        symplectic_commutes(self.x, self.z, other.x, other.z)
    }

    /// Cyclic relabeling `site k -> site (k + shift) mod n`.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.n_sites();
        let mut out = Self::identity(n);
        for site in 0..n {
            out = out.with((site + shift) % n, self.letter(site));
        }
        out
    }

    /// Action on a computational basis state: `P |b> = phase * |b ^ x>`.
    #[inline]
    pub fn act_on_basis(&self, b: usize) -> (usize, Phase) {
        let sign = ((self.z & b as u64).count_ones() * 2) % 4;
        let k = self.y_count() + sign;
        (b ^ self.x as usize, Phase::from_power(k))
    }
}

#[inline]
pub(crate) fn full_mask(n_sites: usize) -> u64 {
    if n_sites >= 64 {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

#[inline]
pub(crate) fn symplectic_commutes(x1: u64, z1: u64, x2: u64, z2: u64) -> bool {
    ((x1 & z2) ^ (z1 & x2)).count_ones().is_multiple_of(2)
}

/// Phase exponent `k` in `P1 P2 = i^k P3` for Hermitian strings in symplectic form.
#[inline]
pub(crate) fn product_phase(x1: u64, z1: u64, x2: u64, z2: u64) -> u32 {
    let x3 = x1 ^ x2;
    let z3 = z1 ^ z2;
    let k = (x1 & z1).count_ones() + (x2 & z2).count_ones() + 2 * (z1 & x2).count_ones() + 4 * 64
        - (x3 & z3).count_ones();
    k % 4
}

/// Multiplies two Pauli strings: `a * b = phase * result`.
pub fn pauli_product(a: &PauliString, b: &PauliString) -> Result<(Phase, PauliString)> {
    if a.n_sites != b.n_sites {
        return Err(structural(format!(
            "Pauli product of strings with {} and {} sites",
            a.n_sites, b.n_sites
        )));
    }
    let k = product_phase(a.x, a.z, b.x, b.z);
    let result = PauliString {
        n_sites: a.n_sites,
        x: a.x ^ b.x,
        z: a.z ^ b.z,
    };
    Ok((Phase::from_power(k), result))
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for site in 0..self.n_sites() {
            write!(f, "{}", self.letter(site).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(structural(format!(
                    "invalid Pauli letter {other:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_letters(&letters)
    }
}
