//! Spectra of `H(tau) = (1 - tau) H_0 + tau H_T` and their ground-state gaps.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, structural, Error, Result};
use crate::lie::{lie_closure_with, reductive_decomposition, ClosureOptions};
use crate::linalg::herm_eigenvalues;
use crate::operators::OperatorSum;
use crate::reachability::{ground_space, DEFAULT_DEGENERACY_TOL, SUPPORT_TOL};
use crate::rep::{commutant, isotypic_projectors, state_support};

/// Eigenvalues within this distance of `E_0` form the ground level.
pub const GROUND_CLUSTER_TOL: f64 = 1e-10;
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
/// Refinement continues at least until the grid spacing near the minimum is below this.
pub const REFINE_SPACING: f64 = 1e-4;
pub const MAX_BISECTIONS: usize = 30;
/// Largest register handled by the dense sweep.
const MAX_SWEEP_SITES: usize = 12;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct MinGap {
    pub tau_star: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub tau_grid: Vec<f64>,
    pub spectra: Vec<Vec<f64>>,
    /// Ground-level gap per grid point; infinite when the spectrum has a single level.
    #[serde(serialize_with = "finite_or_null")]
    pub gap: Vec<f64>,
    pub min_gap: MinGap,
    pub bisections: usize,
}

fn finite_or_null<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&Option::<f64>::None)?;
        }
    }
    seq.end()
}

/// Distance from the top of the ground cluster to the next distinct level.
pub fn ground_gap(spectrum: &[f64]) -> f64 {
    let e0 = spectrum[0];
    let top = spectrum.iter().copied().take_while(|&e| e - e0 <= GROUND_CLUSTER_TOL).last().unwrap_or(e0);
    spectrum
        .iter()
        .find(|&&e| e - top > GROUND_CLUSTER_TOL)
        .map(|&e| e - top)
        .unwrap_or(f64::INFINITY)
}

struct Interpolation {
    h0: crate::linalg::CMatrix,
    ht: crate::linalg::CMatrix,
}

impl Interpolation {
    fn spectrum(&self, tau: f64) -> Vec<f64> {
        herm_eigenvalues(&self.h0 * num_complex::Complex64::new(1.0 - tau, 0.0) + &self.ht * num_complex::Complex64::new(tau, 0.0))
    }
}

/// Dense spectra on a uniform grid of `grid_points`, refined by bisection around the smallest gap.
///
/// Each bisection evaluates both midpoints next to the current minimum. Refinement stops once the
/// local spacing is below [`REFINE_SPACING`] and the last bisection changed the minimum by less
/// than a thousandth of its value, or after [`MAX_BISECTIONS`].
pub fn sweep(h0: &OperatorSum, ht: &OperatorSum, grid_points: usize) -> Result<SweepResult> {
    if h0.n_sites() != ht.n_sites() {
        return Err(structural("endpoint Hamiltonians differ in size"));
    }
    if grid_points < 2 {
        return Err(domain(format!("a sweep needs at least 2 grid points, got {grid_points}")));
    }
    if h0.n_sites() > MAX_SWEEP_SITES {
        return Err(Error::Capacity {
            what: "sites for a dense spectral sweep".into(),
            limit: MAX_SWEEP_SITES,
            reached: h0.n_sites(),
        });
    }
    let interp = Interpolation { h0: h0.to_dense()?, ht: ht.to_dense()? };
    let taus: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
    let mut points: Vec<(f64, Vec<f64>)> = taus.par_iter().map(|&t| (t, interp.spectrum(t))).collect();
    let argmin = |pts: &[(f64, Vec<f64>)]| -> (usize, f64) {
        pts.iter()
            .enumerate()
            .map(|(i, (_, s))| (i, ground_gap(s)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    };
    let mut bisections = 0;
    let (mut i, mut best) = argmin(&points);
    while bisections < MAX_BISECTIONS && best.is_finite() {
        let left = (i > 0).then(|| 0.5 * (points[i - 1].0 + points[i].0));
        let right = (i + 1 < points.len()).then(|| 0.5 * (points[i].0 + points[i + 1].0));
        let spacing = [left, right]
            .iter()
            .flatten()
            .map(|m| (m - points[i].0).abs() * 2.0)
            .fold(0.0, f64::max);
        if let Some(r) = right {
            points.insert(i + 1, (r, interp.spectrum(r)));
        }
        if let Some(l) = left {
            points.insert(i, (l, interp.spectrum(l)));
        }
        bisections += 1;
        let (ni, nb) = argmin(&points);
        let change = best - nb;
        i = ni;
        best = nb;
        if spacing / 2.0 < REFINE_SPACING && change <= 1e-3 * nb {
            break;
        }
    }
    let gap: Vec<f64> = points.iter().map(|(_, s)| ground_gap(s)).collect();
    Ok(SweepResult {
        tau_grid: points.iter().map(|p| p.0).collect(),
        min_gap: MinGap { tau_star: points[i].0, value: best },
        spectra: points.into_iter().map(|p| p.1).collect(),
        gap,
        bisections,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapClass {
    Crossing,
    FiniteGap,
}

pub fn gap_classification(result: &SweepResult, zero_tol: f64) -> GapClass {
    if result.min_gap.value < zero_tol {
        GapClass::Crossing
    } else {
        GapClass::FiniteGap
    }
}

/// Symmetry analysis of the pair `{H_0, H_T}` next to its gap classification.
#[derive(Clone, Debug, Serialize)]
pub struct CrossReport {
    pub lie_dim: usize,
    pub decomposition: String,
    /// Irreducible dimensions grouped by isotypic block.
    pub subspaces: Vec<Vec<usize>>,
    pub subspace_label: String,
    /// Isotypic blocks supporting the ground space of `H_0` and of `H_T`.
    pub initial_support: Vec<String>,
    pub target_support: Vec<String>,
    pub compatible: bool,
    pub min_gap: MinGap,
    pub classification: GapClass,
    pub warnings: Vec<String>,
}

impl CrossReport {
    /// Total number of irreducible subspaces.
    pub fn irreducible_count(&self) -> usize {
        self.subspaces.iter().map(|g| g.len()).sum()
    }
}

pub fn consistency_with_symmetry(h0: &OperatorSum, ht: &OperatorSum, grid_points: usize) -> Result<CrossReport> {
    let pair = [h0.clone(), ht.clone()];
    let basis = lie_closure_with(&pair, &ClosureOptions::default())?;
    let decomposition = reductive_decomposition(&basis)?;
    let n = h0.n_sites();
    let c = commutant(n, &pair)?;
    let mut tree = isotypic_projectors(&c, &pair)?;
    let mats = pair.iter().map(|h| h.to_dense()).collect::<Result<Vec<_>>>()?;
    tree.split_all(&mats)?;
    let support_of = |h: &OperatorSum| -> Result<BTreeSet<String>> {
        let gs = ground_space(h, DEFAULT_DEGENERACY_TOL)?;
        let mut out = BTreeSet::new();
        for s in &gs.basis {
            for sup in state_support(s, &tree, SUPPORT_TOL)? {
                if sup.supported && sup.id.starts_with("iso:") {
                    out.insert(sup.id);
                }
            }
        }
        Ok(out)
    };
    let a = support_of(h0)?;
    let b = support_of(ht)?;
    let sw = sweep(h0, ht, grid_points)?;
    let mut warnings = decomposition.warnings.clone();
    warnings.extend(tree.warnings().iter().cloned());
    Ok(CrossReport {
        lie_dim: basis.dim(),
        decomposition: decomposition.label(),
        subspaces: tree.grouped_dims(),
        subspace_label: tree.label(),
        compatible: !a.is_disjoint(&b),
        initial_support: a.into_iter().collect(),
        target_support: b.into_iter().collect(),
        min_gap: sw.min_gap,
        classification: gap_classification(&sw, DEFAULT_ZERO_TOL),
        warnings,
    })
}

/// CSV with columns `tau,e0,...,e{k-1}` for the lowest `k` levels.
pub fn write_sweep_csv(result: &SweepResult, levels: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let width = result.spectra.first().map(|s| s.len()).unwrap_or(0);
    let k = levels.unwrap_or(width).min(width);
    let header: Vec<String> = std::iter::once("tau".to_string()).chain((0..k).map(|i| format!("e{i}"))).collect();
    writeln!(out, "{}", header.join(","))?;
    for (t, s) in result.tau_grid.iter().zip(&result.spectra) {
        let row: Vec<String> = std::iter::once(format!("{t:.12}")).chain(s[..k].iter().map(|e| format!("{e:.12e}"))).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
