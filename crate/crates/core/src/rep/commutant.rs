use std::ops::Range;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{structural, Error, Result};
use crate::linalg::{
    adjoint_mul, cluster_sorted, cmul, derive_seed, frobenius, herm_eig_sorted, normal,
    real_span_basis, seeded_rng, CMatrix,
};
use crate::operators::OperatorSum;

/// Seed of the generic element that fixes the commutant frame.
pub const DEFAULT_COMMUTANT_SEED: u64 = 0xC0_11u64 << 32 | 0x7A17;

/// Eigenvalues of the generic element closer than this fraction of its spectral scale share a
/// block. Merging too much only adds unknowns.
const FRAME_CLUSTER_TOL: f64 = 1e-9;
/// Eigenvalues of the commutation form below this fraction of the reference scale are null.
const NULL_TOL: f64 = 1e-11;
/// Null-space eigenvalues inside `[NULL_TOL / 100, NULL_TOL * 100]` draw a warning.
const NULL_MARGIN: f64 = 100.0;
/// Relative commutator norm accepted by the post-check.
const COMMUTATION_TOL: f64 = 1e-8;
/// Hermitian and anti-Hermitian parts of a unit element below this norm are dropped.
const PART_NORM_FLOOR: f64 = 1e-6;
/// Largest number of unknowns in the commutation form.
const MAX_UNKNOWNS: usize = 6000;

/// Block-diagonal matrix in the frame of a [`CommutantBasis`]: one square block per cluster.
pub type Blocks = Vec<CMatrix>;

/// Basis of the commutant `{S : [S, H_v] = 0 for all v}` of a set of Hermitian matrices.
///
/// Every commutant element commutes with a generic combination `A = sum_v r_v H_v`, so it is
/// block-diagonal in an eigenbasis `V` of `A`, one block per eigenvalue cluster. Elements are
/// stored in that compact form; [`CommutantBasis::element`] expands one to a dense matrix
/// `V diag(B_c) V^dagger`. The basis is orthonormal under `Tr(A^dagger B)`.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    d: usize,
    frame: CMatrix,
    clusters: Vec<Range<usize>>,
    elements: Vec<Blocks>,
    hermitian: Vec<Blocks>,
    seed: u64,
    null_gap: (f64, f64),
    warnings: Vec<String>,
}

pub(crate) fn zero_blocks(clusters: &[Range<usize>]) -> Blocks {
    clusters.iter().map(|c| CMatrix::zeros(c.len(), c.len())).collect()
}

pub(crate) fn blocks_commutator(a: &Blocks, b: &Blocks) -> Blocks {
    a.iter().zip(b).map(|(x, y)| x * y - y * x).collect()
}

pub(crate) fn blocks_axpy(alpha: Complex64, x: &Blocks, y: &mut Blocks) {
    for (yb, xb) in y.iter_mut().zip(x) {
        *yb += xb * alpha;
    }
}

/// `Tr(a^dagger b)`.
pub(crate) fn blocks_inner(a: &Blocks, b: &Blocks) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum::<Complex64>()).sum()
}

fn flatten_real(b: &Blocks) -> DVector<f64> {
    let re = b.iter().flat_map(|x| x.iter().map(|z| z.re));
    let im = b.iter().flat_map(|x| x.iter().map(|z| z.im));
    DVector::from_iterator(b.iter().map(|x| 2 * x.len()).sum(), re.chain(im))
}

fn unflatten_real(v: &DVector<f64>, clusters: &[Range<usize>]) -> Blocks {
    let half = v.len() / 2;
    let mut offset = 0;
    clusters
        .iter()
        .map(|c| {
            let m = c.len();
            let b = CMatrix::from_fn(m, m, |i, j| {
                // Column-major flattening, matching `iter()`.
                let k = offset + j * m + i;
                Complex64::new(v[k], v[half + k])
            });
            offset += m * m;
            b
        })
        .collect()
}

/// Commutant of the Hamiltonians, using the default seed.
///
/// With no Hamiltonians the commutant is the full matrix algebra on `2^n_sites` dimensions.
pub fn commutant(n_sites: usize, hams: &[OperatorSum]) -> Result<CommutantBasis> {
    commutant_seeded(n_sites, hams, DEFAULT_COMMUTANT_SEED)
}

pub fn commutant_seeded(n_sites: usize, hams: &[OperatorSum], seed: u64) -> Result<CommutantBasis> {
    if let Some(h) = hams.iter().find(|h| h.n_sites() != n_sites) {
        return Err(structural(format!(
            "Hamiltonian acts on {} sites, expected {n_sites}",
            h.n_sites()
        )));
    }
    let mats = hams.iter().map(|h| h.to_dense()).collect::<Result<Vec<_>>>()?;
    commutant_of_matrices(1 << n_sites, &mats, seed)
}

/// Commutant of dense Hermitian `d x d` matrices.
pub fn commutant_of_matrices(d: usize, mats: &[CMatrix], seed: u64) -> Result<CommutantBasis> {
    if let Some(m) = mats.iter().find(|m| m.nrows() != d || m.ncols() != d) {
        return Err(structural(format!("matrix is {}x{}, expected {d}x{d}", m.nrows(), m.ncols())));
    }
    let mut rng = seeded_rng(derive_seed(seed, 0));
    let mut a = CMatrix::zeros(d, d);
    for m in mats {
        a += m * Complex64::new(normal(&mut rng), 0.0);
    }
    let (values, frame) = herm_eig_sorted(a);
    let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let clusters = if scale == 0.0 {
        vec![0..d]
    } else {
        cluster_sorted(&values, FRAME_CLUSTER_TOL * scale)
    };
    let unknowns: Vec<(usize, usize, usize)> = clusters
        .iter()
        .enumerate()
        .flat_map(|(c, r)| {
            let r = r.clone();
            // Column-major order within each block.
            r.clone().flat_map(move |q| r.clone().map(move |p| (c, p, q)))
        })
        .collect();
    let nu = unknowns.len();
    if nu > MAX_UNKNOWNS {
        return Err(Error::Capacity {
            what: "commutant unknowns (within-cluster pairs)".into(),
            limit: MAX_UNKNOWNS,
            reached: nu,
        });
    }

    let rotated: Vec<CMatrix> = mats.iter().map(|m| adjoint_mul(&frame, &cmul(m, &frame))).collect();
    // G_{(p,q),(r,s)} = sum_v [d_pr (H^2)_sq + d_qs (H^2)_pr - 2 H_pr H_sq] gives
    // x^dagger G x = sum_v ||[X, H_v]||_F^2.
    let mut g = CMatrix::zeros(nu, nu);
    for h in &rotated {
        let h2 = cmul(h, h);
        for (u, &(_, p, q)) in unknowns.iter().enumerate() {
            for (w, &(_, r, s)) in unknowns.iter().enumerate() {
                let mut val = h[(p, r)] * h[(s, q)] * -2.0;
                if p == r {
                    val += h2[(s, q)];
                }
                if q == s {
                    val += h2[(p, r)];
                }
                g[(u, w)] += val;
            }
        }
    }
    let (gvals, gvecs) = herm_eig_sorted(g);
    // G carries absolute rounding of order eps sum_v ||H_v||_F^2 from its cancelling terms, so the
    // cut never drops below that scale even when every generator is scalar on every cluster.
    let hscale: f64 = rotated.iter().map(|h| frobenius(h).powi(2)).sum();
    let gmax = gvals.last().copied().unwrap_or(0.0).max(hscale);
    let mut warnings = Vec::new();
    let null: Vec<usize> = (0..nu).filter(|&i| gvals[i] <= NULL_TOL * gmax).collect();
    let last_null = null.last().map(|&i| gvals[i] / gmax.max(f64::MIN_POSITIVE)).unwrap_or(0.0);
    let first_live = gvals
        .get(null.len())
        .map(|v| v / gmax.max(f64::MIN_POSITIVE))
        .unwrap_or(f64::INFINITY);
    if gmax > 0.0 && (last_null > NULL_TOL / NULL_MARGIN || first_live < NULL_TOL * NULL_MARGIN) {
        warnings.push(format!(
            "commutant null space is poorly separated: last null {last_null:e}, first non-null \
             {first_live:e} (relative)"
        ));
    }

    let elements: Vec<Blocks> = null
        .iter()
        .map(|&i| {
            let mut blocks = zero_blocks(&clusters);
            for (u, &(c, p, q)) in unknowns.iter().enumerate() {
                let start = clusters[c].start;
                blocks[c][(p - start, q - start)] = gvecs[(u, i)];
            }
            blocks
        })
        .collect();

    let mut basis = CommutantBasis {
        d,
        frame,
        clusters,
        elements,
        hermitian: Vec::new(),
        seed,
        null_gap: (last_null, first_live),
        warnings,
    };
    basis.check_commutation(&rotated)?;
    basis.hermitian = basis.hermitian_from_elements()?;
    Ok(basis)
}

impl CommutantBasis {
    pub fn dimension(&self) -> usize {
        self.elements.len()
    }

    /// Size `d` of the matrices.
    pub fn matrix_dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Relative eigenvalues of the commutation form on both sides of the null-space cut.
    pub fn null_gap(&self) -> (f64, f64) {
        self.null_gap
    }

    /// Unitary whose columns block-diagonalize every commutant element.
    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    /// Compact form of basis element `k`.
    pub fn blocks(&self, k: usize) -> &Blocks {
        &self.elements[k]
    }

    /// Compact forms of the Hermitian basis; a real basis of the Hermitian part of the
    /// commutant, orthonormal under `Tr(A B)`, with as many elements as [`Self::dimension`].
    pub fn hermitian_blocks(&self) -> &[Blocks] {
        &self.hermitian
    }

    /// Dense `V diag(B_c) V^dagger`.
    pub fn expand(&self, blocks: &Blocks) -> CMatrix {
        let mut vb = CMatrix::zeros(self.d, self.d);
        for (c, b) in self.clusters.iter().zip(blocks) {
            let vc = self.frame.columns(c.start, c.len()).into_owned();
            vb.columns_mut(c.start, c.len()).copy_from(&cmul(&vc, b));
        }
        cmul(&vb, &self.frame.adjoint())
    }

    /// Basis element `k` as a dense matrix.
    pub fn element(&self, k: usize) -> CMatrix {
        self.expand(&self.elements[k])
    }

    pub fn hermitian_element(&self, k: usize) -> CMatrix {
        self.expand(&self.hermitian[k])
    }

    /// Blocks of `V^dagger M V` on the cluster diagonal.
    pub fn compress(&self, m: &CMatrix) -> Blocks {
        let rotated = adjoint_mul(&self.frame, &cmul(m, &self.frame));
        self.clusters
            .iter()
            .map(|c| rotated.view((c.start, c.start), (c.len(), c.len())).into_owned())
            .collect()
    }

    /// Coefficients `Tr(C_k^dagger M)` of `M` on the orthonormal basis.
    pub fn coefficients(&self, m: &CMatrix) -> Vec<Complex64> {
        let compressed = self.compress(m);
        self.elements.iter().map(|e| blocks_inner(e, &compressed)).collect()
    }

    fn check_commutation(&self, rotated: &[CMatrix]) -> Result<()> {
        for (k, e) in self.elements.iter().enumerate() {
            let mut x = CMatrix::zeros(self.d, self.d);
            for (c, b) in self.clusters.iter().zip(e) {
                x.view_mut((c.start, c.start), (c.len(), c.len())).copy_from(b);
            }
            for h in rotated {
                let scale = frobenius(h);
                if scale == 0.0 {
                    continue;
                }
                let comm = cmul(&x, h) - cmul(h, &x);
                let rel = frobenius(&comm) / scale;
                if rel > COMMUTATION_TOL {
                    return Err(Error::Numerical(format!(
                        "commutant element {k} fails the commutation check: relative residual \
                         {rel:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn hermitian_from_elements(&self) -> Result<Vec<Blocks>> {
        let i = Complex64::new(0.0, 1.0);
        let mut parts = Vec::with_capacity(2 * self.elements.len());
        for e in &self.elements {
            let sym: Blocks = e.iter().map(|b| b + b.adjoint()).collect();
            let anti: Blocks = e.iter().map(|b| (b - b.adjoint()) * i).collect();
            // One of the two parts has norm at least sqrt(2); the other may be pure rounding.
            parts.extend(
                [flatten_real(&sym), flatten_real(&anti)]
                    .into_iter()
                    .filter(|v| v.norm() > PART_NORM_FLOOR),
            );
        }
        let basis = real_span_basis(&parts, 1e-8);
        if basis.len() != self.elements.len() {
            return Err(Error::Numerical(format!(
                "Hermitian part of the commutant has real dimension {}, complex dimension is {}",
                basis.len(),
                self.elements.len()
            )));
        }
        // Real Euclidean norm of the flattened blocks is the Frobenius norm.
        Ok(basis.iter().map(|v| unflatten_real(v, &self.clusters)).collect())
    }
}

impl Default for CommutantBasis {
    fn default() -> Self {
        Self {
            d: 0,
            frame: CMatrix::zeros(0, 0),
            clusters: Vec::new(),
            elements: Vec::new(),
            hermitian: Vec::new(),
            seed: 0,
            null_gap: (0.0, f64::INFINITY),
            warnings: Vec::new(),
        }
    }
}
