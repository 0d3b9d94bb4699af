//! Dense linear-algebra helpers shared by the analysis modules.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const C0: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Generator used for every random draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of an independent stream derived from a master seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn sym_eig_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig_sorted(m: CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), m);
    }
    if m.iter().all(|z| z.im == 0.0) {
        let (values, vectors) = sym_eig_sorted(m.map(|z| z.re));
        return (values, vectors.map(|x| Complex64::new(x, 0.0)));
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn herm_eigenvalues(m: CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = if m.iter().all(|z| z.im == 0.0) {
        m.map(|z| z.re)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        m.symmetric_eigenvalues().iter().copied().collect()
    };
    v.sort_by(f64::total_cmp);
    v
}

/// Splits ascending values into maximal runs whose consecutive gaps are at most `tol`.
pub fn cluster_sorted(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Smallest gap between consecutive clusters, or infinity for a single cluster.
pub fn min_cluster_gap(values: &[f64], clusters: &[Range<usize>]) -> f64 {
    clusters
        .windows(2)
        .map(|w| values[w[1].start] - values[w[0].end - 1])
        .fold(f64::INFINITY, f64::min)
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn split(m: &CMatrix) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let re = m.map(|z| z.re);
    let im = if is_real(m) { None } else { Some(m.map(|z| z.im)) };
    (re, im)
}

fn join(re: DMatrix<f64>, im: Option<DMatrix<f64>>) -> CMatrix {
    match im {
        None => re.map(|x| Complex64::new(x, 0.0)),
        Some(im) => re.zip_map(&im, Complex64::new),
    }
}

/// Complex product through real matrix products, which use the optimized real kernel.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    match (ai, bi) {
        (None, None) => join(ar * br, None),
        (Some(ai), None) => join(&ar * &br, Some(ai * br)),
        (None, Some(bi)) => join(&ar * &br, Some(ar * bi)),
        (Some(ai), Some(bi)) => {
            let re = &ar * &br - &ai * &bi;
            let im = ar * bi + ai * br;
            join(re, Some(im))
        }
    }
}

/// `a^dagger b` through [`cmul`].
pub fn adjoint_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    cmul(&a.adjoint(), b)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest `|(Q Q^dagger - 1)_{ij}|` for a matrix with orthonormal rows.
pub fn row_orthogonality_loss(q: &CMatrix) -> f64 {
    let g = q * q.adjoint();
    let mut loss: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { C1 } else { C0 };
            loss = loss.max((g[(i, j)] - target).norm());
        }
    }
    loss
}

/// Modified Gram-Schmidt on the rows of `q`, in place, applied twice.
pub fn reorthonormalize_rows(q: &mut CMatrix) {
    for _ in 0..2 {
        for i in 0..q.nrows() {
            for j in 0..i {
                let proj: Complex64 = (0..q.ncols()).map(|c| q[(j, c)].conj() * q[(i, c)]).sum();
                for c in 0..q.ncols() {
                    let qj = q[(j, c)];
                    q[(i, c)] -= proj * qj;
                }
            }
            let norm: f64 = q.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for c in 0..q.ncols() {
                q[(i, c)] /= norm;
            }
        }
    }
}

/// Orthonormal basis (columns) of the span of real vectors, greedy Gram-Schmidt with two passes.
///
/// A vector is kept when its residual exceeds `rel_tol` times its own norm.
pub fn real_span_basis(vectors: &[DVector<f64>], rel_tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let rn = r.norm();
        if rn > rel_tol * norm {
            basis.push(r / rn);
        }
    }
    basis
}

/// Numerical rank of a real matrix from its singular values.
pub fn real_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_sorted_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let (v, vecs) = sym_eig_sorted(m.clone());
        assert_eq!(v, vec![-1.0, 2.0, 3.0]);
        let back = &vecs * DMatrix::from_diagonal(&DVector::from_vec(v)) * vecs.transpose();
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn complex_product_matches_direct() {
        let a = CMatrix::from_fn(3, 4, |i, j| Complex64::new(i as f64 - j as f64, (i * j) as f64));
        let b = CMatrix::from_fn(4, 2, |i, j| Complex64::new((i + j) as f64, 0.5 * i as f64 - 1.0));
        assert!(frobenius(&(cmul(&a, &b) - &a * &b)) < 1e-12);
        let r = a.map(|z| Complex64::new(z.re, 0.0));
        assert!(frobenius(&(cmul(&r, &b) - &r * &b)) < 1e-12);
        assert!(frobenius(&(adjoint_mul(&b, &b) - b.adjoint() * &b)) < 1e-12);
    }

    #[test]
    fn clustering() {
        let c = cluster_sorted(&[0.0, 1e-12, 1.0, 2.0, 2.0 + 1e-13], 1e-9);
        assert_eq!(c, vec![0..2, 2..3, 3..5]);
        assert!((min_cluster_gap(&[0.0, 1e-12, 1.0, 2.0, 2.0], &c) - 1.0).abs() < 1e-9);
        assert!(cluster_sorted(&[], 1.0).is_empty());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn span_basis_drops_dependent_vectors() {
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let c = DVector::from_vec(vec![2.0, 1.0, 0.0]);
        assert_eq!(real_span_basis(&[a, b, c], 1e-9).len(), 2);
    }
}
