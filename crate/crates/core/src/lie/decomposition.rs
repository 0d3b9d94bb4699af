use std::collections::BTreeMap;

use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};

use super::closure::LieBasis;
use crate::error::{Error, Result};
use crate::linalg::{cluster_sorted, derive_seed, normal, seeded_rng, sym_eig_sorted};

/// Seed of the first generic-element draw.
pub const DEFAULT_DECOMPOSITION_SEED: u64 = 0x5EED_11E5;

const MAX_DRAWS: usize = 6;
/// Relative eigenvalue threshold on `sum_g ad_g^T ad_g` below which a direction is central.
const CENTER_TOL: f64 = 1e-10;
/// Relative singular-value threshold for the centralizer of a generic element.
const RANK_TOL: f64 = 1e-7;
/// Relative gap below which eigenvalues of `-ad_x^2` are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-9;
/// Residual ratio above which an adjoint image extends an ideal.
const IDEAL_TOL: f64 = 1e-7;

/// One simple or abelian summand of a compact Lie algebra.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Component {
    pub label: String,
    pub dim: usize,
    pub rank: usize,
}

impl Component {
    fn u1() -> Self {
        Self {
            label: "u(1)".into(),
            dim: 1,
            rank: 1,
        }
    }

    fn simple(dim: usize, rank: usize) -> Self {
        let p = rank + 1;
        let label = if dim == p * p - 1 {
            format!("su({p})")
        } else {
            format!("simple({dim},{rank})")
        };
        Self { label, dim, rank }
    }

    pub fn is_abelian(&self) -> bool {
        self.label == "u(1)"
    }
}

/// Whether `(dim, rank)` belongs to a compact simple Lie algebra.
pub fn is_simple_signature(dim: usize, rank: usize) -> bool {
    let r = rank;
    if r == 0 {
        return false;
    }
    let a = r * r + 2 * r;
    let bc = 2 * r * r + r;
    let d = 2 * r * r - r;
    dim == a
        || (r >= 2 && dim == bc)
        || (r >= 4 && dim == d)
        || matches!(
            (dim, rank),
            (14, 2) | (52, 4) | (78, 6) | (133, 7) | (248, 8)
        )
}

/// Splitting `g = g_1 + ... + g_k + center` into pairwise commuting ideals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductiveDecomposition {
    pub dim: usize,
    pub center_dim: usize,
    /// Simple ideals by decreasing dimension, then one `u(1)` per center direction.
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ReductiveDecomposition {
    /// Compact label such as `su(6)+2su(3)+u(1)`; equal neighbours are counted.
    pub fn label(&self) -> String {
        if self.components.is_empty() {
            return "0".into();
        }
        let mut parts: Vec<(usize, &str)> = Vec::new();
        for c in &self.components {
            match parts.last_mut() {
                Some((k, l)) if *l == c.label => *k += 1,
                _ => parts.push((1, &c.label)),
            }
        }
        parts
            .iter()
            .map(|&(k, l)| {
                if k == 1 {
                    l.to_string()
                } else {
                    format!("{k}{l}")
                }
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Multiset of `(label, dim)` pairs.
    pub fn signature(&self) -> BTreeMap<(String, usize), usize> {
        let mut m = BTreeMap::new();
        for c in &self.components {
            *m.entry((c.label.clone(), c.dim)).or_insert(0) += 1;
        }
        m
    }
}

/// Ideal decomposition together with the orthonormal bases (columns over the Lie basis) of the
/// simple ideals and the center.
#[derive(Clone, Debug)]
pub struct IdealBases {
    pub decomposition: ReductiveDecomposition,
    pub ideals: Vec<DMatrix<f64>>,
    pub center: DMatrix<f64>,
}

/// Decomposes a closed Lie basis into simple ideals and its center.
///
/// The center is the common kernel of the generators' adjoint matrices. Each simple ideal is the
/// ideal generated by an eigenvector of `-ad_x^2` for a generic element `x`; its rank is the
/// dimension of the centralizer of `x` inside the ideal. Two independent draws of `x` must agree.
pub fn reductive_decomposition(basis: &LieBasis) -> Result<ReductiveDecomposition> {
    reductive_decomposition_seeded(basis, DEFAULT_DECOMPOSITION_SEED).map(|b| b.decomposition)
}

pub fn reductive_decomposition_seeded(basis: &LieBasis, seed: u64) -> Result<IdealBases> {
    let dim = basis.dim();
    let ads: Vec<DMatrix<f64>> = (0..basis.generator_count())
        .map(|g| basis.ad_matrix(g))
        .collect();
    let center_dim = center_dimension(&ads, dim);
    if center_dim == dim {
        return Ok(IdealBases {
            decomposition: ReductiveDecomposition {
                dim,
                center_dim,
                components: vec![Component::u1(); center_dim],
                warnings: Vec::new(),
            },
            ideals: Vec::new(),
            center: DMatrix::identity(dim, dim),
        });
    }

    let mut accepted: Option<(Vec<Component>, Vec<DMatrix<f64>>)> = None;
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for draw in 0..MAX_DRAWS {
        let depth = if draw < 2 { 2 } else { 3 };
        let x = generic_ad(&ads, derive_seed(seed, draw as u64), depth);
        match split_with(&ads, &x, dim - center_dim) {
            Ok((components, ideals)) => match &accepted {
                Some((prev, _)) if *prev == components => {
                    return Ok(finish(dim, center_dim, components, ideals, seed, warnings));
                }
                Some((prev, _)) => {
                    warnings.push(format!(
                        "generic draws disagree: {} vs {}",
                        labels(prev),
                        labels(&components)
                    ));
                    accepted = Some((components, ideals));
                }
                None => accepted = Some((components, ideals)),
            },
            Err(msg) => failures.push(msg),
        }
    }
    match accepted {
        Some((components, ideals)) => {
            warnings.push("no two generic draws agreed; reporting the last valid split".into());
            Ok(finish(dim, center_dim, components, ideals, seed, warnings))
        }
        None => Err(Error::Degeneracy(format!(
            "no generic element split the algebra: {}",
            failures.join("; ")
        ))),
    }
}

fn labels(c: &[Component]) -> String {
    c.iter()
        .map(|c| c.label.as_str())
        .collect::<Vec<_>>()
        .join("+")
}

fn finish(
    dim: usize,
    center_dim: usize,
    mut components: Vec<Component>,
    ideals: Vec<DMatrix<f64>>,
    seed: u64,
    warnings: Vec<String>,
) -> IdealBases {
    components.extend(std::iter::repeat_n(Component::u1(), center_dim));
    let center = complement(&ideals, dim, center_dim, seed);
    IdealBases {
        decomposition: ReductiveDecomposition {
            dim,
            center_dim,
            components,
            warnings,
        },
        ideals,
        center,
    }
}

/// Dimension of the common kernel of the adjoint matrices.
fn center_dimension(ads: &[DMatrix<f64>], dim: usize) -> usize {
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    for a in ads {
        k += a.transpose() * a;
    }
    let values = k.symmetric_eigenvalues();
    let max = values
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    values.iter().filter(|&&v| v <= CENTER_TOL * max).count()
}

/// Orthonormal basis of the orthogonal complement of the ideals, which is the center because
/// the adjoint matrices are antisymmetric.
fn complement(ideals: &[DMatrix<f64>], dim: usize, center_dim: usize, seed: u64) -> DMatrix<f64> {
    let mut span = Span::new(dim);
    for q in ideals {
        span.data.extend(q.iter());
    }
    let start = span.len();
    let mut rng = seeded_rng(derive_seed(seed, u64::MAX));
    let mut y = DMatrix::from_fn(dim, center_dim, |_, _| normal(&mut rng));
    for mut c in y.column_iter_mut() {
        c.normalize_mut();
    }
    span.extend_block(y, 1.0);
    span.block(start, span.len())
}

/// Adjoint matrix of `x = sum_g r_g g + sum_{g<h} r_gh [g,h] (+ depth-3 brackets)`.
fn generic_ad(ads: &[DMatrix<f64>], seed: u64, depth: usize) -> DMatrix<f64> {
    let mut rng = seeded_rng(seed);
    let dim = ads[0].nrows();
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    for a in ads {
        x += a * normal(&mut rng);
    }
    let mut brackets = Vec::new();
    for i in 0..ads.len() {
        for j in i + 1..ads.len() {
            let b = &ads[i] * &ads[j] - &ads[j] * &ads[i];
            x += &b * normal(&mut rng);
            brackets.push(b);
        }
    }
    if depth >= 3 {
        for b in &brackets {
            for a in ads {
                let c = b * a - a * b;
                x += c * normal(&mut rng);
            }
        }
    }
    x
}

/// Columns orthonormal under the Euclidean inner product, grown by blocked two-pass
/// Gram-Schmidt. Stored column-major.
struct Span {
    dim: usize,
    data: Vec<f64>,
}

impl Span {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn view(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.dim, self.len())
    }

    fn col(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    fn project_out(&self, y: &mut DMatrix<f64>) {
        if self.len() == 0 {
            return;
        }
        for _ in 0..2 {
            let c = self.view().transpose() * &*y;
            *y -= self.view() * c;
        }
    }

    /// Appends the residuals of the columns of `y` whose norm exceeds `IDEAL_TOL * reference`,
    /// largest residual first, so accepted directions are as well conditioned as the block allows.
    fn extend_block(&mut self, mut y: DMatrix<f64>, reference: f64) {
        if reference == 0.0 {
            return;
        }
        self.project_out(&mut y);
        let start = self.len();
        let mut live: Vec<usize> = (0..y.ncols()).collect();
        loop {
            let Some((pos, &j)) = live.iter().enumerate().max_by(|a, b| {
                y.column(*a.1).norm_squared().total_cmp(&y.column(*b.1).norm_squared())
            }) else {
                break;
            };
            if y.column(j).norm() <= IDEAL_TOL * reference {
                break;
            }
            live.swap_remove(pos);
            let mut r: Vec<f64> = y.column(j).iter().copied().collect();
            for k in start..self.len() {
                let b = self.col(k);
                let c: f64 = b.iter().zip(&r).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
            }
            let nr = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            r.iter_mut().for_each(|x| *x /= nr);
            for &l in &live {
                let c: f64 = y.column(l).iter().zip(&r).map(|(x, y)| x * y).sum();
                for (yi, ri) in y.column_mut(l).iter_mut().zip(&r) {
                    *yi -= c * ri;
                }
            }
            self.data.extend(r);
        }
    }

    fn block(&self, from: usize, to: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(
            self.dim,
            to - from,
            &self.data[from * self.dim..to * self.dim],
        )
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        self.block(0, self.len())
    }
}

/// Smallest subspace containing `seed` and invariant under every adjoint matrix.
fn generated_ideal(ads: &[DMatrix<f64>], seed: &DVector<f64>, cap: usize) -> Span {
    let dim = seed.len();
    let mut span = Span::new(dim);
    span.extend_block(
        DMatrix::from_column_slice(dim, 1, seed.as_slice()),
        seed.norm(),
    );
    // Images of unit vectors are compared with the norm of each matrix.
    let scales: Vec<f64> = ads.iter().map(|a| a.norm()).collect();
    let mut frontier = 0;
    while frontier < span.len() && span.len() <= cap {
        let end = span.len();
        let block = span.block(frontier, end);
        for (a, &scale) in ads.iter().zip(&scales) {
            span.extend_block(a * &block, scale);
        }
        frontier = end;
    }
    span
}

/// One attempt at splitting the semisimple part with the generic element whose adjoint is `x`.
fn split_with(
    ads: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    semisimple_dim: usize,
) -> std::result::Result<(Vec<Component>, Vec<DMatrix<f64>>), String> {
    let dim = x.nrows();
    let (values, vectors) = sym_eig_sorted(x.transpose() * x);
    let max = values.last().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Err("generic element is central".into());
    }
    let mut found = Span::new(dim);
    let mut ideals = Vec::new();
    let mut components = Vec::new();
    // Seeds come from the most isolated eigenvalue clusters first: the leakage of a computed
    // eigenvector into other ideals scales with the inverse gap.
    let clusters = cluster_sorted(&values, CLUSTER_TOL * max);
    let gaps: Vec<f64> = (0..clusters.len())
        .map(|c| {
            let below = if c > 0 {
                values[clusters[c].start] - values[clusters[c - 1].end - 1]
            } else {
                f64::INFINITY
            };
            let above = if c + 1 < clusters.len() {
                values[clusters[c + 1].start] - values[clusters[c].end - 1]
            } else {
                f64::INFINITY
            };
            below.min(above)
        })
        .collect();
    let mut order: Vec<usize> = (0..clusters.len())
        .filter(|&c| values[clusters[c].start] > RANK_TOL * RANK_TOL * max)
        .collect();
    order.sort_by(|&a, &b| gaps[b].total_cmp(&gaps[a]));
    for c in order {
        if found.len() >= semisimple_dim {
            break;
        }
        let v = vectors.column(clusters[c].start).into_owned();
        if found.len() > 0 && (found.view().transpose() * &v).norm_squared() > 0.75 {
            continue;
        }
        let ideal = generated_ideal(ads, &v, semisimple_dim);
        let q = ideal.to_matrix();
        let d_i = q.ncols();
        if found.len() > 0 && (found.view().transpose() * &q).amax() > 1e-6 {
            return Err(format!("ideal of dimension {d_i} overlaps earlier ideals"));
        }
        let restricted = q.transpose() * x * &q;
        let sv = restricted.singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s <= RANK_TOL * smax).count();
        if !is_simple_signature(d_i, rank) {
            return Err(format!(
                "ideal with (dim, rank) = ({d_i}, {rank}) is not simple"
            ));
        }
        components.push(Component::simple(d_i, rank));
        found.data.extend(ideal.data);
        ideals.push(q);
    }
    if found.len() != semisimple_dim {
        return Err(format!(
            "ideals cover {} of {semisimple_dim} semisimple directions",
            found.len()
        ));
    }
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|&a, &b| {
        components[b]
            .dim
            .cmp(&components[a].dim)
            .then(components[b].rank.cmp(&components[a].rank))
    });
    let components = order.iter().map(|&i| components[i].clone()).collect();
    let ideals = order.iter().map(|&i| ideals[i].clone()).collect();
    Ok((components, ideals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::lie_closure;
    use crate::operators::{OperatorSum, Pauli, PauliString};

    fn op(n: usize, terms: &[(&str, f64)]) -> OperatorSum {
        OperatorSum::from_terms(n, terms.iter().map(|(s, c)| (s.parse().unwrap(), *c))).unwrap()
    }

    #[test]
    fn signature_table() {
        assert!(is_simple_signature(3, 1));
        assert!(is_simple_signature(8, 2));
        assert!(is_simple_signature(10, 2));
        assert!(is_simple_signature(14, 2));
        assert!(is_simple_signature(28, 4));
        assert!(!is_simple_signature(6, 2));
        assert!(!is_simple_signature(4, 2));
        assert_eq!(Component::simple(15, 3).label, "su(4)");
        assert_eq!(Component::simple(10, 2).label, "simple(10,2)");
    }

    #[test]
    fn su2_plus_su2() {
        // Local X and Z on two qubits generate su(2) + su(2).
        let gens = [
            op(2, &[("XI", 1.0)]),
            op(2, &[("ZI", 1.0)]),
            op(2, &[("IX", 1.0)]),
            op(2, &[("IZ", 1.0)]),
        ];
        let b = lie_closure(&gens, 64).unwrap();
        let d = reductive_decomposition(&b).unwrap();
        assert_eq!(d.label(), "2su(2)");
        assert_eq!(d.center_dim, 0);
    }

    #[test]
    fn su4_from_universal_set() {
        let gens = [
            op(2, &[("XI", 1.0)]),
            op(2, &[("ZI", 1.0)]),
            op(2, &[("IX", 1.0)]),
            op(2, &[("IZ", 1.0)]),
            op(2, &[("ZZ", 1.0)]),
        ];
        let b = lie_closure(&gens, 64).unwrap();
        assert_eq!(b.dim(), 15);
        let d = reductive_decomposition(&b).unwrap();
        assert_eq!(d.label(), "su(4)");
    }

    #[test]
    fn abelian_set_is_all_center() {
        let z = OperatorSum::single(PauliString::single(2, 0, Pauli::Z), 1.0);
        let zz = op(2, &[("ZZ", 1.0)]);
        let d = reductive_decomposition(&lie_closure(&[z, zz], 16).unwrap()).unwrap();
        assert_eq!(d.label(), "2u(1)");
        assert_eq!(d.center_dim, 2);
    }

    #[test]
    fn so3_is_su2() {
        // Spin-1 representation of su(2) via collective operators on two qubits.
        let gens = [
            op(2, &[("XI", 1.0), ("IX", 1.0)]),
            op(2, &[("ZI", 1.0), ("IZ", 1.0)]),
        ];
        let d = reductive_decomposition(&lie_closure(&gens, 16).unwrap()).unwrap();
        assert_eq!(d.label(), "su(2)");
    }

    #[test]
    fn json_shape() {
        let d = ReductiveDecomposition {
            dim: 4,
            center_dim: 1,
            components: vec![Component::simple(3, 1), Component::u1()],
            warnings: vec![],
        };
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"dim":4,"center_dim":1,"components":[{"label":"su(2)","dim":3,"rank":1},{"label":"u(1)","dim":1,"rank":1}]}"#
        );
    }
}
