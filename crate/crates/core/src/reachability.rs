//! Reachability verdicts from invariant-subspace supports of initial and target states.
//!
//! Every unitary generated by the resource set maps each invariant subspace to itself, so the
//! weights `||P_j psi||^2` are conserved. A target whose support is disjoint from the initial
//! state's support cannot be reached. The converse does not hold: `NotBlocked` only records the
//! absence of this obstruction.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, structural, Result};
use crate::linalg::{adjoint_mul, cmul, frobenius, herm_eig_sorted, real_rank, CMatrix};
use crate::operators::OperatorSum;
use crate::rep::{state_support, ProjectorTree, Support};
use crate::state::StateVector;

/// Weights above this count as support.
pub const SUPPORT_TOL: f64 = 1e-8;
/// Weights in `(BORDERLINE_FLOOR, SUPPORT_TOL]` draw a warning.
pub const BORDERLINE_FLOOR: f64 = 1e-12;
/// Eigenvalues within this distance of the minimum belong to the ground space.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
/// Weight profiles differing by more than this in some subspace are distinct.
const PROFILE_TOL: f64 = 1e-6;
/// Relative size below which restricted center elements vanish.
pub const IMPACT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GroundSpace {
    pub energy: f64,
    pub basis: Vec<StateVector>,
    /// Full spectrum, ascending.
    pub spectrum: Vec<f64>,
}

impl GroundSpace {
    pub fn degeneracy(&self) -> usize {
        self.basis.len()
    }
}

/// Ground space of `h` by dense diagonalization.
pub fn ground_space(h: &OperatorSum, degeneracy_tol: f64) -> Result<GroundSpace> {
    if !(degeneracy_tol >= 0.0) {
        return Err(domain(format!("degeneracy tolerance {degeneracy_tol} must be nonnegative")));
    }
    let n = h.n_sites();
    let (values, vectors) = herm_eig_sorted(h.to_dense()?);
    let e0 = values[0];
    let basis = values
        .iter()
        .enumerate()
        .take_while(|(_, &v)| v - e0 <= degeneracy_tol)
        .map(|(i, _)| StateVector::normalized(n, vectors.column(i).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundSpace {
        energy: e0,
        basis,
        spectrum: values,
    })
}

/// Computational basis state `|0...0>`, the first basis vector.
pub fn default_initial_state(n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(domain("a register needs at least one site"));
    }
    Ok(StateVector::basis(n, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Isotypic,
    Irreducible,
}

impl std::str::FromStr for Level {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotypic" => Ok(Self::Isotypic),
            "irreducible" => Ok(Self::Irreducible),
            _ => Err(domain(format!("unknown level {s:?}; expected isotypic or irreducible"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Blocked,
    NotBlocked,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightEntry {
    pub subspace: String,
    pub dim: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachabilityReport {
    pub level: Level,
    pub verdict: Verdict,
    pub initial: Vec<WeightEntry>,
    pub targets: Vec<Vec<WeightEntry>>,
    /// Subspaces supporting the initial state or some target but not both.
    pub blocking_evidence: Vec<String>,
    pub initial_support: Vec<String>,
    pub target_support: Vec<String>,
    pub advisories: Vec<String>,
    pub warnings: Vec<String>,
}

impl ReachabilityReport {
    pub fn is_blocked(&self) -> bool {
        self.verdict == Verdict::Blocked
    }
}

fn level_entries(supports: Vec<Support>, level: Level) -> Vec<WeightEntry> {
    let prefix = match level {
        Level::Isotypic => "iso:",
        Level::Irreducible => "irr:",
    };
    supports
        .into_iter()
        .filter(|s| s.id.starts_with(prefix))
        .map(|s| WeightEntry {
            subspace: s.id,
            dim: s.dim,
            weight: s.weight,
        })
        .collect()
}

fn support_set(entries: &[WeightEntry], tol: f64) -> BTreeSet<String> {
    entries.iter().filter(|e| e.weight > tol).map(|e| e.subspace.clone()).collect()
}

fn borderline(entries: &[WeightEntry], tol: f64, who: &str, out: &mut Vec<String>) {
    for e in entries {
        if e.weight > BORDERLINE_FLOOR && e.weight <= tol {
            out.push(format!("{who}: weight {:e} on {} is near the support threshold", e.weight, e.subspace));
        }
    }
}

/// Compares the support of `initial` with the union of the target supports.
///
/// `Blocked` when the two sets are disjoint. Irreducible level needs every isotypic block split;
/// otherwise the analysis falls back to the isotypic level with a warning.
pub fn verdict(
    initial: &StateVector,
    targets: &[StateVector],
    tree: &ProjectorTree,
    level: Level,
    tol: f64,
) -> Result<ReachabilityReport> {
    if targets.is_empty() {
        return Err(structural("verdict needs at least one target state"));
    }
    let mut warnings = Vec::new();
    let split = (0..tree.isotypic().len()).all(|j| tree.irreducible(j).is_some());
    let level = if level == Level::Irreducible && !split {
        warnings.push("irreducible level unavailable; using isotypic level".into());
        Level::Isotypic
    } else {
        level
    };
    let init = level_entries(state_support(initial, tree, tol)?, level);
    let targ = targets
        .iter()
        .map(|t| Ok(level_entries(state_support(t, tree, tol)?, level)))
        .collect::<Result<Vec<_>>>()?;
    borderline(&init, tol, "initial", &mut warnings);
    for (k, t) in targ.iter().enumerate() {
        borderline(t, tol, &format!("target {k}"), &mut warnings);
    }
    let init_set = support_set(&init, tol);
    let targ_set: BTreeSet<String> = targ.iter().flat_map(|t| support_set(t, tol)).collect();
    let verdict = if init_set.is_disjoint(&targ_set) {
        Verdict::Blocked
    } else {
        Verdict::NotBlocked
    };
    let blocking_evidence = init_set.symmetric_difference(&targ_set).cloned().collect();

    let mut advisories = Vec::new();
    if verdict == Verdict::NotBlocked {
        let matches = targ.iter().any(|t| {
            t.iter().zip(&init).all(|(a, b)| (a.weight - b.weight).abs() <= PROFILE_TOL)
        });
        if !matches {
            advisories.push(
                "profile-obstructed: supports overlap but no target has the initial weight profile"
                    .into(),
            );
        }
    }
    Ok(ReachabilityReport {
        level,
        verdict,
        initial: init,
        targets: targ,
        blocking_evidence,
        initial_support: init_set.into_iter().collect(),
        target_support: targ_set.into_iter().collect(),
        advisories,
        warnings,
    })
}

/// Columns spanning subspace `id` ("iso:j" or "irr:j.k") in the full space.
pub fn subspace_isometry(tree: &ProjectorTree, id: &str) -> Result<CMatrix> {
    let bad = || domain(format!("unknown subspace id {id:?}"));
    if let Some(j) = id.strip_prefix("iso:") {
        let j: usize = j.parse().map_err(|_| bad())?;
        return Ok(tree.isotypic().get(j).ok_or_else(bad)?.isometry().clone());
    }
    let rest = id.strip_prefix("irr:").ok_or_else(bad)?;
    let (j, k) = rest.split_once('.').ok_or_else(bad)?;
    let (j, k): (usize, usize) = (j.parse().map_err(|_| bad())?, k.parse().map_err(|_| bad())?);
    let block = tree.isotypic().get(j).ok_or_else(bad)?;
    let irr = tree.irreducible(j).and_then(|s| s.blocks.get(k)).ok_or_else(bad)?;
    Ok(cmul(block.isometry(), irr.basis()))
}

/// `k` orthonormal eigenvectors of the projector onto subspace `id`.
///
/// The vectors are Gram-Schmidt orthonormalized projections `P e_i` of computational basis
/// states, taken in order of descending `(P)_ii` (ties by index), so the choice does not depend
/// on the internal basis of the subspace.
pub fn suggest_initial_states(tree: &ProjectorTree, id: &str, k: usize) -> Result<Vec<StateVector>> {
    let u = subspace_isometry(tree, id)?;
    let dim = u.ncols();
    if k > dim {
        return Err(domain(format!("requested {k} states from a subspace of dimension {dim}")));
    }
    let d = u.nrows();
    let n_sites = d.trailing_zeros() as usize;
    let diag: Vec<f64> = (0..d).map(|i| u.row(i).iter().map(|z| z.norm_sqr()).sum()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]).then(a.cmp(&b)));
    let mut out: Vec<DVector<Complex64>> = Vec::with_capacity(k);
    for i in order {
        if out.len() == k {
            break;
        }
        if diag[i] <= SUPPORT_TOL {
            break;
        }
        // P e_i = U (U^dagger e_i) = U * conj(row i of U)^T.
        let coeffs = u.row(i).adjoint();
        let mut v = &u * coeffs;
        for _ in 0..2 {
            for b in &out {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > 1e-6 * diag[i].sqrt() {
            out.push(v / Complex64::new(n, 0.0));
        }
    }
    if out.len() < k {
        return Err(crate::Error::Numerical(format!(
            "found only {} independent projections for {k} requested states",
            out.len()
        )));
    }
    out.into_iter().map(|v| StateVector::normalized(n_sites, v)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Impact {
    None,
    Possible,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImpactReport {
    pub impact: Impact,
    /// Number of extra center directions, orthogonal to the resource center.
    pub extra_dim: usize,
    /// Isotypic subspaces supporting the initial state or a target.
    pub examined: Vec<String>,
}

/// Whether the extra center directions of an extended algebra act on the subspaces that matter.
///
/// `extended_center` comes from [`crate::lie::center_basis`] of the extended set and
/// `resource_center` from the resource set. Both are restricted to the isotypic subspaces that
/// support the initial state or a target. The impact is `Possible` when the restrictions of the
/// extended center span more than those of the resource center, so that no choice of the extra
/// directions modulo the resource center vanishes there.
pub fn center_impact(
    extended_center: &[OperatorSum],
    resource_center: &[OperatorSum],
    tree: &ProjectorTree,
    initial: &StateVector,
    targets: &[StateVector],
) -> Result<ImpactReport> {
    let mut examined = BTreeSet::new();
    let mut states = vec![initial];
    states.extend(targets);
    for s in states {
        for sup in state_support(s, tree, SUPPORT_TOL)? {
            if sup.supported && sup.id.starts_with("iso:") {
                examined.insert(sup.id);
            }
        }
    }
    let isometries = examined
        .iter()
        .map(|id| subspace_isometry(tree, id))
        .collect::<Result<Vec<_>>>()?;
    // Rows: one center element restricted to every examined subspace, flattened to reals.
    let restrict = |zs: &[OperatorSum]| -> Result<Vec<Vec<Vec<f64>>>> {
        zs.iter()
            .map(|z| {
                let dense = z.to_dense()?;
                let scale = frobenius(&dense).max(f64::MIN_POSITIVE);
                Ok(isometries
                    .iter()
                    .map(|u| {
                        let r = adjoint_mul(u, &cmul(&dense, u)) / Complex64::new(scale, 0.0);
                        r.iter().flat_map(|c| [c.re, c.im]).collect()
                    })
                    .collect())
            })
            .collect()
    };
    let ext = restrict(extended_center)?;
    let res = restrict(resource_center)?;
    let rank_of = |rows: &[Vec<Vec<f64>>], cols: Option<usize>| -> usize {
        let flat: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| match cols {
                Some(j) => r[j].clone(),
                None => r.concat(),
            })
            .collect();
        let width = flat.first().map(|r| r.len()).unwrap_or(0);
        if flat.is_empty() || width == 0 {
            return 0;
        }
        let m = DMatrix::from_fn(flat.len(), width, |i, j| flat[i][j]);
        if m.iter().all(|v| v.abs() <= IMPACT_TOL) {
            return 0;
        }
        real_rank(&m, IMPACT_TOL)
    };
    let extra_dim = extended_center.len().saturating_sub(resource_center.len());
    let possible = rank_of(&ext, None) > rank_of(&res, None);
    Ok(ImpactReport {
        impact: if possible { Impact::Possible } else { Impact::None },
        extra_dim,
        examined: examined.into_iter().collect(),
    })
}
