//! Layer propagators `exp(-i dt (omega H_Omega - delta H_Delta + H_d))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{sym_eig_sorted, CVector};
use crate::operators::{OperatorSum, ResourceSet};
use crate::state::StateVector;

/// Largest Krylov subspace per step.
pub const KRYLOV_CAP: usize = 64;
/// Target error of one Krylov step relative to the vector norm.
const KRYLOV_TOL: f64 = 1e-13;
/// Time-step halvings allowed before a Krylov step fails.
const MAX_HALVINGS: usize = 40;

/// Parameters of one ansatz layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub omega: f64,
    pub delta: f64,
    pub dt: f64,
}

impl LayerParams {
    pub fn new(omega: f64, delta: f64, dt: f64) -> Result<Self> {
        let p = Self { omega, delta, dt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.delta.is_finite() && self.dt.is_finite()) {
            return Err(domain(format!("non-finite layer parameters {self:?}")));
        }
        if self.dt < 0.0 {
            return Err(domain(format!("layer duration {} is negative", self.dt)));
        }
        Ok(())
    }
}

/// `exp(-i t H) v` for Hermitian `H` given by `matvec`, by Lanczos with full
/// reorthogonalization; returns the result and the number of matrix-vector products.
pub fn krylov_expm(
    matvec: &dyn Fn(&CVector) -> Result<CVector>,
    v: &CVector,
    t: f64,
) -> Result<(CVector, usize)> {
    let norm = v.norm();
    if norm == 0.0 || t == 0.0 {
        return Ok((v.clone(), 0));
    }
    let mut out = v.clone();
    let mut remaining = t;
    let mut step = t;
    let mut products = 0;
    let mut halvings = 0;
    while remaining.abs() > 0.0 {
        let tau = if step.abs() > remaining.abs() { remaining } else { step };
        match krylov_step(matvec, &out, tau, &mut products)? {
            Some(next) => {
                out = next;
                remaining -= tau;
            }
            None => {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Numerical(format!(
                        "Krylov exponential did not converge within {KRYLOV_CAP} vectors after \
                         {MAX_HALVINGS} step halvings (remaining time {remaining:e})"
                    )));
                }
                step = tau / 2.0;
            }
        }
    }
    Ok((out, products))
}

/// One step of length `tau`, or `None` when the error estimate misses the tolerance.
fn krylov_step(
    matvec: &dyn Fn(&CVector) -> Result<CVector>,
    v: &CVector,
    tau: f64,
    products: &mut usize,
) -> Result<Option<CVector>> {
    let norm = v.norm();
    let mut basis: Vec<CVector> = vec![v / Complex64::new(norm, 0.0)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let k = basis.len() - 1;
        let mut w = matvec(&basis[k])?;
        *products += 1;
        let a = basis[k].dotc(&w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let b = w.norm();
        let m = alpha.len();
        // Small-matrix exponential of the tridiagonal projection.
        let tri = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let (vals, vecs) = sym_eig_sorted(tri);
        let coeffs: Vec<Complex64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|l| Complex64::from_polar(vecs[(i, l)] * vecs[(0, l)], -tau * vals[l]))
                    .sum()
            })
            .collect();
        let breakdown = b <= 1e-14 * (a.abs() + beta.last().copied().unwrap_or(0.0)).max(1e-300);
        let error = b * coeffs[m - 1].norm();
        if breakdown || error <= KRYLOV_TOL {
            let mut out = CVector::zeros(v.len());
            for (q, c) in basis.iter().zip(&coeffs) {
                out += q * (c * norm);
            }
            return Ok(Some(out));
        }
        if m == KRYLOV_CAP {
            return Ok(None);
        }
        beta.push(b);
        basis.push(w / Complex64::new(b, 0.0));
    }
}

/// Applies one layer with the Krylov method.
pub fn apply_layer(state: &StateVector, p: &LayerParams, resources: &ResourceSet) -> Result<StateVector> {
    p.validate()?;
    if resources.n_sites() != state.n_sites() {
        return Err(crate::error::structural(format!(
            "state on {} sites, resources on {}",
            state.n_sites(),
            resources.n_sites()
        )));
    }
    let h = resources.layer_hamiltonian(p.omega, p.delta);
    let matvec = |x: &CVector| h.apply(x);
    let (out, _) = krylov_expm(&matvec, state.amplitudes(), p.dt)?;
    StateVector::normalized(state.n_sites(), out)
}

/// Dense real matrices of the resource set, for the eigendecomposition path.
#[derive(Clone, Debug)]
pub struct DenseResources {
    pub(crate) drift: DMatrix<f64>,
    pub(crate) omega: DMatrix<f64>,
    /// Diagonal of `H_Delta`.
    pub(crate) delta: DVector<f64>,
}

impl DenseResources {
    pub fn new(resources: &ResourceSet) -> Result<Self> {
        Ok(Self {
            drift: resources.drift.to_dense_real()?,
            omega: resources.omega.to_dense_real()?,
            delta: DVector::from_vec(resources.delta.diagonal()?),
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub(crate) fn layer_matrix(&self, p: &LayerParams) -> DMatrix<f64> {
        let mut h = &self.drift + &self.omega * p.omega;
        for i in 0..h.nrows() {
            h[(i, i)] -= p.delta * self.delta[i];
        }
        h
    }

    /// Eigendecomposition of the layer Hamiltonian.
    pub(crate) fn eigen(&self, p: &LayerParams) -> LayerEigen {
        let (values, vectors) = sym_eig_sorted(self.layer_matrix(p));
        LayerEigen { values, vectors, dt: p.dt }
    }
}

/// `H = W diag(lambda) W^T` for one layer, with its duration.
pub(crate) struct LayerEigen {
    pub(crate) values: Vec<f64>,
    pub(crate) vectors: DMatrix<f64>,
    pub(crate) dt: f64,
}

pub(crate) fn real_t_mul(w: &DMatrix<f64>, x: &CVector) -> CVector {
    let re = w.tr_mul(&x.map(|z| z.re));
    let im = w.tr_mul(&x.map(|z| z.im));
    CVector::from_fn(x.len(), |i, _| Complex64::new(re[i], im[i]))
}

pub(crate) fn real_mul(w: &DMatrix<f64>, x: &CVector) -> CVector {
    let re = w * x.map(|z| z.re);
    let im = w * x.map(|z| z.im);
    CVector::from_fn(x.len(), |i, _| Complex64::new(re[i], im[i]))
}

impl LayerEigen {
    /// `exp(-i s H) x`.
    pub(crate) fn propagate(&self, x: &CVector, s: f64) -> CVector {
        let mut y = real_t_mul(&self.vectors, x);
        for (yi, &l) in y.iter_mut().zip(&self.values) {
            *yi *= Complex64::from_polar(1.0, -s * l);
        }
        real_mul(&self.vectors, &y)
    }
}

/// Applies one layer through a dense eigendecomposition.
pub fn apply_layer_dense(state: &StateVector, p: &LayerParams, dense: &DenseResources) -> Result<StateVector> {
    p.validate()?;
    if dense.dim() != state.dim() {
        return Err(crate::error::structural("state and resources differ in dimension"));
    }
    let eig = dense.eigen(p);
    StateVector::normalized(state.n_sites(), eig.propagate(state.amplitudes(), p.dt))
}

/// `<psi|H|psi>`.
pub fn energy(state: &StateVector, target: &OperatorSum) -> Result<f64> {
    let hpsi = target.apply(state.amplitudes())?;
    Ok(state.amplitudes().dotc(&hpsi).re)
}
