//! Site permutations shared by a generator set, and the orbit coordinates they induce.
//!
//! If every generator is invariant under a site permutation, so is every nested commutator. The
//! generated algebra therefore lives in the space of operators whose Pauli coefficients are
//! constant on orbits of the invariance group, and one coefficient per orbit describes it.

use crate::operators::OperatorSum;

/// Site permutation `site -> perm[site]`.
pub(crate) type SitePerm = Vec<usize>;

/// Rotations and reflections of a ring of `n` sites.
pub(crate) fn dihedral_perms(n: usize) -> Vec<SitePerm> {
    let mut out = Vec::with_capacity(2 * n);
    for shift in 0..n {
        out.push((0..n).map(|s| (s + shift) % n).collect());
        out.push((0..n).map(|s| (n + shift - s) % n).collect());
    }
    out.sort();
    out.dedup();
    out
}

fn permute_mask(n: usize, mask: u64, perm: &[usize]) -> u64 {
    let mut out = 0;
    for (s, &t) in perm.iter().enumerate() {
        if mask >> (n - 1 - s) & 1 == 1 {
            out |= 1 << (n - 1 - t);
        }
    }
    out
}

/// Pauli index (`x | z << n`) of the string with letters moved by `perm`.
pub(crate) fn permute_index(n: usize, index: usize, perm: &[usize]) -> usize {
    let mask = (1u64 << n) - 1;
    let x = permute_mask(n, index as u64 & mask, perm);
    let z = permute_mask(n, (index as u64 >> n) & mask, perm);
    (x | (z << n)) as usize
}

fn is_invariant(op: &OperatorSum, perm: &[usize]) -> bool {
    let n = op.n_sites();
    op.terms().all(|(p, c)| {
        let q = crate::operators::PauliString::from_index(n, permute_index(n, p.index(), perm));
        (op.coeff(&q) - c).abs() <= 1e-15 * c.abs().max(1.0)
    })
}

/// Ring permutations leaving every operator in `ops` invariant (a subgroup).
pub(crate) fn invariance_group(n: usize, ops: &[OperatorSum]) -> Vec<SitePerm> {
    dihedral_perms(n)
        .into_iter()
        .filter(|p| ops.iter().all(|op| is_invariant(op, p)))
        .collect()
}

/// Orbits of Pauli strings under a permutation group.
///
/// Coordinates over this space are the common Pauli coefficient on each orbit, so the trace
/// inner product becomes `sum_o |o| a_o b_o`.
#[derive(Clone, Debug)]
pub(crate) struct OrbitSpace {
    n_sites: usize,
    group: Vec<SitePerm>,
    orbit_of: Vec<u32>,
    reps: Vec<usize>,
    sizes: Vec<f64>,
}

impl OrbitSpace {
    pub(crate) fn new(n_sites: usize, group: Vec<SitePerm>) -> Self {
        let total = 1usize << (2 * n_sites);
        let mut orbit_of = vec![u32::MAX; total];
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        for idx in 0..total {
            if orbit_of[idx] != u32::MAX {
                continue;
            }
            let id = reps.len() as u32;
            let mut size = 0;
            for perm in &group {
                let j = permute_index(n_sites, idx, perm);
                if orbit_of[j] == u32::MAX {
                    orbit_of[j] = id;
                    size += 1;
                }
            }
            if size == 0 {
                orbit_of[idx] = id;
                size = 1;
            }
            reps.push(idx);
            sizes.push(size as f64);
        }
        Self {
            n_sites,
            group,
            orbit_of,
            reps,
            sizes,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.reps.len()
    }

    pub(crate) fn group(&self) -> &[SitePerm] {
        &self.group
    }

    pub(crate) fn orbit_of(&self, index: usize) -> usize {
        self.orbit_of[index] as usize
    }

    pub(crate) fn rep(&self, orbit: usize) -> usize {
        self.reps[orbit]
    }

    pub(crate) fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Orbit-averaged coordinates of `op` and the squared norm of its non-invariant remainder.
    pub(crate) fn coordinates(&self, op: &OperatorSum) -> (Vec<f64>, f64) {
        let mut sums = vec![0.0; self.len()];
        for (p, c) in op.terms() {
            sums[self.orbit_of(p.index())] += c;
        }
        let coords: Vec<f64> = sums.iter().zip(&self.sizes).map(|(s, n)| s / n).collect();
        let mut rem = 0.0;
        let mut seen = vec![0.0; self.len()];
        for (p, c) in op.terms() {
            let o = self.orbit_of(p.index());
            rem += (c - coords[o]).powi(2);
            seen[o] += 1.0;
        }
        // Strings absent from `op` carry coefficient zero, off the average by `coords[o]`.
        for o in 0..self.len() {
            rem += (self.sizes[o] - seen[o]) * coords[o] * coords[o];
        }
        (coords, rem)
    }

    /// Operator with coefficient `coords[o]` on every string of orbit `o`.
    pub(crate) fn to_operator(&self, coords: &[f64], prune: f64) -> OperatorSum {
        let n = self.n_sites;
        let mut terms = Vec::new();
        for (o, &c) in coords.iter().enumerate() {
            if c.abs() <= prune {
                continue;
            }
            let rep = self.reps[o];
            let mut members: Vec<usize> = self
                .group
                .iter()
                .map(|p| permute_index(n, rep, p))
                .collect();
            if members.is_empty() {
                members.push(rep);
            }
            members.sort_unstable();
            members.dedup();
            for m in members {
                terms.push((crate::operators::PauliString::from_index(n, m), c));
            }
        }
        OperatorSum::from_terms(n, terms).expect("sizes agree")
    }

    /// Re-expresses orbit coordinates of `self` in a finer space `fine` (a subgroup's orbits).
    pub(crate) fn refine(&self, fine: &OrbitSpace, coords: &[f64]) -> Vec<f64> {
        (0..fine.len())
            .map(|o| coords[self.orbit_of(fine.rep(o))])
            .collect()
    }
}
