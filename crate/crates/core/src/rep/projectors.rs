use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::commutant::{
    blocks_axpy, blocks_commutator, blocks_inner, commutant_of_matrices, zero_blocks, Blocks,
    CommutantBasis,
};
use crate::error::{domain, structural, Error, Result};
use crate::linalg::{
    adjoint_mul, cmul, derive_seed, frobenius, herm_eig_sorted, normal, reorthonormalize_rows,
    row_orthogonality_loss, seeded_rng, sym_eig_sorted, CMatrix,
};
use crate::operators::OperatorSum;
use crate::state::{StateVector, NORM_TOL};

/// Central-element eigenvalues split into clusters at gaps above this fraction of the range.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Tolerance on projector identities and commutation with the inputs.
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Re-orthonormalization threshold for the isometry columns.
const ORTHO_TOL: f64 = 1e-12;
/// Null-space cut for the center of the commutant, relative to the largest Gram eigenvalue.
const CENTER_NULL_TOL: f64 = 1e-10;
/// Gram eigenvalues of restricted commutant coefficients are 0 or 1; the cut sits between.
const RESTRICTED_RANK_TOL: f64 = 1e-6;
/// Largest commutant dimension whose center is computed.
const MAX_CENTER_INPUT: usize = 400;
const MAX_CENTRAL_DRAWS: u64 = 5;
const MAX_SPLIT_REDRAWS: u64 = 2;

/// One isotypic subspace: `m` copies of an irreducible representation of dimension `q`.
#[derive(Clone, Debug)]
pub struct IsotypicBlock {
    multiplicity: usize,
    irrep_dim: usize,
    /// `d x (m q)`; orthonormal columns spanning the subspace, `Q_j = isometry^dagger`.
    isometry: CMatrix,
}

impl IsotypicBlock {
    pub fn dim(&self) -> usize {
        self.isometry.ncols()
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn irrep_dim(&self) -> usize {
        self.irrep_dim
    }

    /// Columns form an orthonormal basis of the subspace.
    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    /// Reduction `Q_j` with orthonormal rows, `Q_j^dagger Q_j = P_j`.
    pub fn reduction(&self) -> CMatrix {
        self.isometry.adjoint()
    }

    pub fn projector(&self) -> CMatrix {
        cmul(&self.isometry, &self.isometry.adjoint())
    }

    /// `Tr P_j` over the diagonal, `(P_j)_{ii}`.
    fn diagonal(&self) -> Vec<f64> {
        self.isometry.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect()
    }
}

/// Irreducible subspace inside an isotypic block, in the reduced coordinates of that block.
#[derive(Clone, Debug)]
pub struct IrreducibleBlock {
    certified: bool,
    /// `dim(P_j) x q`; orthonormal columns, `P~_k = basis basis^dagger`.
    basis: CMatrix,
}

impl IrreducibleBlock {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// True when the commutant of the restricted action was verified to be the scalars.
    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Projector in the reduced coordinates of the parent block.
    pub fn projector(&self) -> CMatrix {
        cmul(&self.basis, &self.basis.adjoint())
    }
}

/// Outcome of [`irreducible_split`].
#[derive(Clone, Debug)]
pub struct IrreducibleSplit {
    pub blocks: Vec<IrreducibleBlock>,
    /// False when certification failed after the re-draws; `blocks` is the last attempt.
    pub complete: bool,
    pub warnings: Vec<String>,
}

/// Isotypic decomposition of a representation, optionally refined into irreducible subspaces.
#[derive(Clone, Debug)]
pub struct ProjectorTree {
    d: usize,
    seed: u64,
    commutant_dim: usize,
    isotypic: Vec<IsotypicBlock>,
    irreducible: Vec<Option<IrreducibleSplit>>,
    warnings: Vec<String>,
}

/// Hermitian basis of the center of the commutant, in compact form.
fn commutant_center(c: &CommutantBasis) -> Result<Vec<Blocks>> {
    let herm = c.hermitian_blocks();
    let n = herm.len();
    if n > MAX_CENTER_INPUT {
        return Err(Error::Capacity {
            what: "commutant dimension for the center computation".into(),
            limit: MAX_CENTER_INPUT,
            reached: n,
        });
    }
    // comm[a][b] = [S_a, S_b]; the center is the null space of
    // G_{aa'} = sum_b Re Tr([S_a, S_b]^dagger [S_a', S_b]).
    let comm: Vec<Vec<Blocks>> = (0..n)
        .into_par_iter()
        .map(|a| (0..n).map(|b| blocks_commutator(&herm[a], &herm[b])).collect())
        .collect();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for a2 in a..n {
            let v: f64 = (0..n).map(|b| blocks_inner(&comm[a][b], &comm[a2][b]).re).sum();
            g[(a, a2)] = v;
            g[(a2, a)] = v;
        }
    }
    let (vals, vecs) = sym_eig_sorted(g);
    let max = vals.last().copied().unwrap_or(0.0).max(0.0);
    Ok((0..n)
        .filter(|&i| vals[i] <= CENTER_NULL_TOL * max)
        .map(|i| {
            let mut z = zero_blocks(c.clusters());
            for a in 0..n {
                blocks_axpy(Complex64::new(vecs[(a, i)], 0.0), &herm[a], &mut z);
            }
            z
        })
        .collect())
}

/// Columns of the frame selected by local eigenvectors inside each frame cluster.
struct Selection {
    /// Per frame cluster: local eigenvectors (columns) belonging to this isotypic block.
    local: Vec<CMatrix>,
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > PROJECTOR_TOL {
            return y.total_cmp(x);
        }
    }
    Ordering::Equal
}

/// Isotypic projectors of the representation whose commutant is `c`.
///
/// A random Hermitian element of the center of the commutant has one eigenvalue per isotypic
/// subspace. Blocks are ordered by irreducible dimension, then multiplicity (both descending),
/// then by the diagonal of the projector.
pub fn isotypic_projectors(c: &CommutantBasis, hams: &[OperatorSum]) -> Result<ProjectorTree> {
    let mats = hams.iter().map(|h| h.to_dense()).collect::<Result<Vec<_>>>()?;
    isotypic_projectors_of_matrices(c, &mats)
}

pub fn isotypic_projectors_of_matrices(c: &CommutantBasis, mats: &[CMatrix]) -> Result<ProjectorTree> {
    let d = c.matrix_dim();
    if c.dimension() == 0 {
        return Err(structural("commutant is empty; it always contains the identity"));
    }
    if let Some(m) = mats.iter().find(|m| m.nrows() != d) {
        return Err(structural(format!("matrix of size {} for a commutant on {d}", m.nrows())));
    }
    let center = commutant_center(c)?;
    let nz = center.len();
    let mut warnings: Vec<String> = c.warnings().to_vec();
    let mut selections = None;
    for draw in 0..MAX_CENTRAL_DRAWS {
        let mut rng = seeded_rng(derive_seed(c.seed(), 100 + draw));
        let mut z = zero_blocks(c.clusters());
        for zc in &center {
            blocks_axpy(Complex64::new(normal(&mut rng), 0.0), zc, &mut z);
        }
        // (eigenvalue, frame cluster, local eigenvector index)
        let mut spectrum = Vec::with_capacity(d);
        let mut local_vecs = Vec::with_capacity(z.len());
        for (ci, block) in z.into_iter().enumerate() {
            let (vals, vecs) = herm_eig_sorted(block);
            spectrum.extend(vals.into_iter().enumerate().map(|(k, v)| (v, ci, k)));
            local_vecs.push(vecs);
        }
        spectrum.sort_by(|a, b| a.0.total_cmp(&b.0));
        let range = spectrum.last().map(|l| l.0).unwrap_or(0.0) - spectrum.first().map(|f| f.0).unwrap_or(0.0);
        let tol = CLUSTER_TOL * range;
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut min_gap = f64::INFINITY;
        for (i, &(v, ci, k)) in spectrum.iter().enumerate() {
            if i > 0 && nz > 1 {
                let gap = v - spectrum[i - 1].0;
                if gap > tol {
                    groups.push(Vec::new());
                    min_gap = min_gap.min(gap);
                }
            }
            groups.last_mut().expect("nonempty").push((ci, k));
        }
        if groups.len() != nz {
            warnings.push(format!(
                "central draw {draw} gave {} eigenvalue clusters for a center of dimension {nz}",
                groups.len()
            ));
            continue;
        }
        if min_gap.is_finite() && min_gap < 10.0 * tol {
            warnings.push(format!(
                "smallest central eigenvalue gap {min_gap:e} is within 10x of the cluster tolerance"
            ));
        }
        selections = Some(
            groups
                .into_iter()
                .map(|g| {
                    let local = c
                        .clusters()
                        .iter()
                        .enumerate()
                        .map(|(ci, r)| {
                            let cols: Vec<usize> =
                                g.iter().filter(|(c2, _)| *c2 == ci).map(|&(_, k)| k).collect();
                            CMatrix::from_fn(r.len(), cols.len(), |i, j| local_vecs[ci][(i, cols[j])])
                        })
                        .collect();
                    Selection { local }
                })
                .collect::<Vec<_>>(),
        );
        break;
    }
    let selections = selections.ok_or_else(|| {
        Error::Degeneracy(format!(
            "no central element with {nz} separated eigenvalues in {MAX_CENTRAL_DRAWS} draws"
        ))
    })?;

    let herm = c.hermitian_blocks();
    let mut isotypic = selections
        .par_iter()
        .map(|sel| build_block(c, herm, sel))
        .collect::<Result<Vec<_>>>()?;
    let diags: Vec<Vec<f64>> = isotypic.iter().map(|b| b.diagonal()).collect();
    let mut order: Vec<usize> = (0..isotypic.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&isotypic[a], &isotypic[b]);
        y.irrep_dim
            .cmp(&x.irrep_dim)
            .then(y.multiplicity.cmp(&x.multiplicity))
            .then_with(|| lex_desc(&diags[a], &diags[b]))
    });
    let mut slots: Vec<Option<IsotypicBlock>> = isotypic.drain(..).map(Some).collect();
    let isotypic: Vec<IsotypicBlock> = order.iter().map(|&i| slots[i].take().expect("once")).collect();

    let tree = ProjectorTree {
        d,
        seed: c.seed(),
        commutant_dim: c.dimension(),
        irreducible: vec![None; isotypic.len()],
        isotypic,
        warnings,
    };
    tree.verify(mats)?;
    Ok(tree)
}

fn build_block(c: &CommutantBasis, herm: &[Blocks], sel: &Selection) -> Result<IsotypicBlock> {
    let d = c.matrix_dim();
    let rank: usize = sel.local.iter().map(|w| w.ncols()).sum();
    let mut isometry = CMatrix::zeros(d, rank);
    let mut col = 0;
    for (r, w) in c.clusters().iter().zip(&sel.local) {
        if w.ncols() == 0 {
            continue;
        }
        let vc = c.frame().columns(r.start, r.len()).into_owned();
        isometry.columns_mut(col, w.ncols()).copy_from(&cmul(&vc, w));
        col += w.ncols();
    }
    let mut q = isometry.adjoint();
    if row_orthogonality_loss(&q) > ORTHO_TOL {
        reorthonormalize_rows(&mut q);
    }
    let isometry = q.adjoint();

    // m^2 = dimension of the commutant compressed to the block.
    let restricted: Vec<Blocks> = herm
        .iter()
        .map(|s| {
            s.iter()
                .zip(&sel.local)
                .map(|(b, w)| adjoint_mul(w, &(b * w)))
                .collect()
        })
        .collect();
    let n = restricted.len();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = blocks_inner(&restricted[a], &restricted[b]).re;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    let (vals, _) = sym_eig_sorted(g);
    let m2 = vals.iter().filter(|&&v| v > RESTRICTED_RANK_TOL).count();
    let m = (m2 as f64).sqrt().round() as usize;
    if m == 0 || m * m != m2 || !rank.is_multiple_of(m) {
        return Err(Error::Numerical(format!(
            "isotypic block of dimension {rank} has a compressed commutant of dimension {m2}, \
             not a full matrix algebra"
        )));
    }
    Ok(IsotypicBlock {
        multiplicity: m,
        irrep_dim: rank / m,
        isometry,
    })
}

/// Reduced matrices `Q_j H_v Q_j^dagger` on one isotypic block.
pub fn reduce_block(block: &IsotypicBlock, hams: &[OperatorSum]) -> Result<Vec<CMatrix>> {
    let d = block.isometry.nrows();
    hams.iter()
        .map(|h| {
            if h.dim() != d {
                return Err(structural(format!("Hamiltonian of dimension {} for a block in {d}", h.dim())));
            }
            Ok(reduce_matrix(block, &h.to_dense()?))
        })
        .collect()
}

pub fn reduce_matrix(block: &IsotypicBlock, m: &CMatrix) -> CMatrix {
    adjoint_mul(&block.isometry, &cmul(m, &block.isometry))
}

/// Splits an isotypic block into irreducible subspaces.
///
/// A random Hermitian element of the reduced commutant `M_m (x) 1_q` has `m` eigenvalues of
/// multiplicity `q`; each eigenspace is certified by checking that the commutant of the restricted
/// action is one-dimensional.
pub fn irreducible_split(reduced: &[CMatrix], reduced_commutant: &CommutantBasis) -> Result<IrreducibleSplit> {
    let r = reduced_commutant.matrix_dim();
    if let Some(m) = reduced.iter().find(|m| m.nrows() != r) {
        return Err(structural(format!("reduced matrix of size {} for a commutant on {r}", m.nrows())));
    }
    let herm = reduced_commutant.hermitian_blocks();
    let m2 = herm.len();
    let m = (m2 as f64).sqrt().round() as usize;
    if m == 0 || m * m != m2 || !r.is_multiple_of(m) {
        return Err(structural(format!(
            "reduced commutant of dimension {m2} on {r} dimensions is not that of an isotypic block"
        )));
    }
    let q = r / m;
    let mut warnings = Vec::new();
    let mut last = Vec::new();
    for draw in 0..=MAX_SPLIT_REDRAWS {
        let mut rng = seeded_rng(derive_seed(reduced_commutant.seed(), 200 + draw));
        let mut x = zero_blocks(reduced_commutant.clusters());
        for s in herm {
            blocks_axpy(Complex64::new(normal(&mut rng), 0.0), s, &mut x);
        }
        let (vals, vecs) = herm_eig_sorted(reduced_commutant.expand(&x));
        let range = vals.last().copied().unwrap_or(0.0) - vals.first().copied().unwrap_or(0.0);
        let groups = if m == 1 {
            vec![0..r]
        } else {
            crate::linalg::cluster_sorted(&vals, CLUSTER_TOL * range)
        };
        let blocks: Vec<IrreducibleBlock> = groups
            .iter()
            .map(|g| {
                let basis = vecs.columns(g.start, g.len()).into_owned();
                let certified = g.len() == q && certify(reduced, &basis, derive_seed(reduced_commutant.seed(), 300 + draw));
                IrreducibleBlock { certified, basis }
            })
            .collect();
        let ok = blocks.len() == m && blocks.iter().all(|b| b.certified);
        if ok {
            return Ok(IrreducibleSplit { blocks, complete: true, warnings });
        }
        warnings.push(format!(
            "irreducible split draw {draw}: {} subspaces of dimensions {:?}, {} certified",
            blocks.len(),
            blocks.iter().map(|b| b.dim()).collect::<Vec<_>>(),
            blocks.iter().filter(|b| b.certified).count()
        ));
        last = blocks;
    }
    warnings.push("split incomplete".into());
    Ok(IrreducibleSplit { blocks: last, complete: false, warnings })
}

fn certify(reduced: &[CMatrix], basis: &CMatrix, seed: u64) -> bool {
    let restricted: Vec<CMatrix> = reduced.iter().map(|h| adjoint_mul(basis, &cmul(h, basis))).collect();
    // Invariance: the restriction loses nothing, H W = W (W^dagger H W).
    let invariant = reduced.iter().zip(&restricted).all(|(h, hr)| {
        let scale = frobenius(h).max(f64::MIN_POSITIVE);
        frobenius(&(cmul(h, basis) - cmul(basis, hr))) <= PROJECTOR_TOL * scale.max(1.0)
    });
    invariant
        && commutant_of_matrices(basis.ncols(), &restricted, seed)
            .map(|c| c.dimension() == 1)
            .unwrap_or(false)
}

/// Weight `||P psi||^2` of a state on one subspace.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Support {
    /// `"iso:j"` or `"irr:j.k"`.
    pub id: String,
    pub dim: usize,
    pub weight: f64,
    pub supported: bool,
}

/// Weights of `state` on every isotypic subspace and on every computed irreducible subspace.
pub fn state_support(state: &StateVector, tree: &ProjectorTree, tol: f64) -> Result<Vec<Support>> {
    let psi = state.amplitudes();
    if psi.len() != tree.d {
        return Err(structural(format!("state of dimension {} for a tree on {}", psi.len(), tree.d)));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(domain(format!("state has norm {norm}, expected 1")));
    }
    let mut out = Vec::new();
    for (j, block) in tree.isotypic.iter().enumerate() {
        let reduced = block.isometry.ad_mul(psi);
        let weight = reduced.norm_squared();
        out.push(Support { id: format!("iso:{j}"), dim: block.dim(), weight, supported: weight > tol });
        if let Some(split) = &tree.irreducible[j] {
            for (k, irr) in split.blocks.iter().enumerate() {
                let w = irr.basis.ad_mul(&reduced).norm_squared();
                out.push(Support { id: format!("irr:{j}.{k}"), dim: irr.dim(), weight: w, supported: w > tol });
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct IrreducibleJson {
    id: String,
    dim: usize,
    certified: bool,
}

#[derive(Serialize)]
struct IsotypicJson {
    id: String,
    dim: usize,
    multiplicity: usize,
    irrep_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    irreducible: Option<Vec<IrreducibleJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split_complete: Option<bool>,
}

/// Layout of the projector sidecar file.
#[derive(Clone, Debug, Serialize)]
pub struct SidecarIndex {
    pub file: String,
    /// Subspace ids in file order; each entry is a `dim x dim` matrix.
    pub order: Vec<String>,
    pub dim: usize,
    pub format: &'static str,
}

impl ProjectorTree {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn commutant_dim(&self) -> usize {
        self.commutant_dim
    }

    pub fn isotypic(&self) -> &[IsotypicBlock] {
        &self.isotypic
    }

    pub fn irreducible(&self, j: usize) -> Option<&IrreducibleSplit> {
        self.irreducible[j].as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `sum_j m_j^2`, which equals the commutant dimension.
    pub fn multiplicity_square_sum(&self) -> usize {
        self.isotypic.iter().map(|b| b.multiplicity * b.multiplicity).sum()
    }

    /// Invariant-subspace dimensions grouped by isotypic block, e.g. `[[4], [2, 2]]`.
    pub fn grouped_dims(&self) -> Vec<Vec<usize>> {
        self.isotypic.iter().map(|b| vec![b.irrep_dim; b.multiplicity]).collect()
    }

    /// Compact text form, e.g. `4,(2,2)`.
    pub fn label(&self) -> String {
        self.grouped_dims()
            .iter()
            .map(|g| {
                if g.len() == 1 {
                    g[0].to_string()
                } else {
                    format!("({})", g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Index of the isotypic block carrying the largest weight of `psi`.
    pub fn dominant_block(&self, psi: &StateVector) -> Option<usize> {
        self.isotypic
            .iter()
            .enumerate()
            .map(|(j, b)| (j, b.isometry.ad_mul(psi.amplitudes()).norm_squared()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
    }

    /// Splits every isotypic block into irreducible subspaces.
    pub fn split_all(&mut self, mats: &[CMatrix]) -> Result<()> {
        let seed = self.seed;
        let splits = self
            .isotypic
            .par_iter()
            .enumerate()
            .map(|(j, block)| {
                let reduced: Vec<CMatrix> = mats.iter().map(|m| reduce_matrix(block, m)).collect();
                let rc = commutant_of_matrices(block.dim(), &reduced, derive_seed(seed, 1000 + j as u64))?;
                let split = irreducible_split(&reduced, &rc)?;
                if rc.dimension() != block.multiplicity * block.multiplicity {
                    return Err(Error::Numerical(format!(
                        "block {j}: reduced commutant has dimension {}, expected {}",
                        rc.dimension(),
                        block.multiplicity * block.multiplicity
                    )));
                }
                Ok(split)
            })
            .collect::<Result<Vec<_>>>()?;
        for (j, s) in splits.into_iter().enumerate() {
            if !s.complete {
                self.warnings.push(format!("iso:{j}: split incomplete"));
            }
            self.irreducible[j] = Some(s);
        }
        Ok(())
    }

    /// Irreducible projector `k` of block `j` lifted to the full space.
    pub fn lifted_irreducible(&self, j: usize, k: usize) -> Option<CMatrix> {
        let irr = self.irreducible[j].as_ref()?.blocks.get(k)?;
        let u = cmul(&self.isotypic[j].isometry, &irr.basis);
        Some(cmul(&u, &u.adjoint()))
    }

    /// Checks orthonormality, completeness and commutation with the inputs.
    pub fn verify(&self, mats: &[CMatrix]) -> Result<()> {
        let total: usize = self.isotypic.iter().map(|b| b.dim()).sum();
        if total != self.d {
            return Err(Error::Numerical(format!("isotypic dimensions sum to {total}, not {}", self.d)));
        }
        let all = CMatrix::from_fn(self.d, total, |_, _| Complex64::new(0.0, 0.0));
        let mut all = all;
        let mut col = 0;
        for b in &self.isotypic {
            all.columns_mut(col, b.dim()).copy_from(&b.isometry);
            col += b.dim();
        }
        // Orthonormal columns across all blocks give completeness and P_j P_k = delta_jk P_j.
        let loss = row_orthogonality_loss(&all.adjoint());
        if loss > PROJECTOR_TOL {
            return Err(Error::Numerical(format!("isotypic bases lose orthonormality by {loss:e}")));
        }
        for m in mats {
            let scale = frobenius(m).max(1.0);
            for (j, b) in self.isotypic.iter().enumerate() {
                let hu = cmul(m, &b.isometry);
                let leak = frobenius(&(&hu - cmul(&b.isometry, &adjoint_mul(&b.isometry, &hu))));
                if leak > PROJECTOR_TOL * scale {
                    return Err(Error::Numerical(format!(
                        "isotypic block {j} is not invariant: leakage {leak:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let blocks: Vec<IsotypicJson> = self
            .isotypic
            .iter()
            .enumerate()
            .map(|(j, b)| IsotypicJson {
                id: format!("iso:{j}"),
                dim: b.dim(),
                multiplicity: b.multiplicity,
                irrep_dim: b.irrep_dim,
                irreducible: self.irreducible[j].as_ref().map(|s| {
                    s.blocks
                        .iter()
                        .enumerate()
                        .map(|(k, irr)| IrreducibleJson {
                            id: format!("irr:{j}.{k}"),
                            dim: irr.dim(),
                            certified: irr.certified,
                        })
                        .collect()
                }),
                split_complete: self.irreducible[j].as_ref().map(|s| s.complete),
            })
            .collect();
        serde_json::json!({
            "dimension": self.d,
            "seed": self.seed,
            "commutant_dim": self.commutant_dim,
            "center_dim": self.isotypic.len(),
            "label": self.label(),
            "subspaces": blocks,
            "warnings": self.warnings,
        })
    }

    /// Writes every isotypic projector, then every lifted irreducible projector, as row-major
    /// `(re, im)` little-endian `f64` pairs.
    pub fn write_sidecar(&self, path: &Path) -> Result<SidecarIndex> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut order = Vec::new();
        let mut emit = |id: String, p: &CMatrix, out: &mut std::io::BufWriter<std::fs::File>| -> Result<()> {
            for i in 0..p.nrows() {
                for j in 0..p.ncols() {
                    out.write_all(&p[(i, j)].re.to_le_bytes())?;
                    out.write_all(&p[(i, j)].im.to_le_bytes())?;
                }
            }
            order.push(id);
            Ok(())
        };
        for (j, b) in self.isotypic.iter().enumerate() {
            emit(format!("iso:{j}"), &b.projector(), &mut out)?;
        }
        for j in 0..self.isotypic.len() {
            let count = self.irreducible[j].as_ref().map(|s| s.blocks.len()).unwrap_or(0);
            for k in 0..count {
                let p = self.lifted_irreducible(j, k).expect("exists");
                emit(format!("irr:{j}.{k}"), &p, &mut out)?;
            }
        }
        out.flush()?;
        Ok(SidecarIndex {
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            order,
            dim: self.d,
            format: "row-major complex128 (re, im) little-endian",
        })
    }
}
