//! Layered analog ansatz, its energy, and restarted gradient optimization.
//!
//! A circuit with `M` layers maps `psi_0` to `U_M ... U_1 psi_0` with
//! `U_j = exp(-i dt_j (omega_j H_Omega - delta_j H_Delta + H_d))`. Registers up to
//! [`DENSE_LIMIT`] dimensions use per-layer eigendecompositions and an exact adjoint gradient;
//! larger ones use Krylov propagation and central finite differences.

mod evolve;

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use evolve::{
    apply_layer, apply_layer_dense, energy, krylov_expm, DenseResources, LayerParams, KRYLOV_CAP,
};
use evolve::{real_mul, real_t_mul, LayerEigen};

use crate::error::{domain, structural, Result};
use crate::linalg::{derive_seed, herm_eigenvalues, seeded_rng, CMatrix, CVector};
use crate::operators::{OperatorSum, ResourceSet};
use crate::rep::ProjectorTree;
use crate::state::StateVector;

/// Largest dimension handled by the dense path.
pub const DENSE_LIMIT: usize = 64;
/// Relative step of the central finite differences.
pub const FD_STEP: f64 = 1e-5;
pub const OMEGA_RANGE: (f64, f64) = (-2.0, 2.0);
pub const DELTA_RANGE: (f64, f64) = (-2.0, 2.0);
pub const DT_RANGE: (f64, f64) = (0.0, std::f64::consts::PI);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.02,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMethod {
    /// Adjoint gradient on the dense path, finite differences otherwise.
    Auto,
    FiniteDifference,
}

#[derive(Clone, Debug)]
pub struct VqeConfig {
    pub resources: ResourceSet,
    pub target: OperatorSum,
    pub initial: StateVector,
    pub layers: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub adam: AdamParams,
    pub gradient: GradientMethod,
    pub seed: u64,
    /// Iterations between stored checkpoint states; 0 disables checkpoints.
    pub checkpoint_every: usize,
    /// Stop a restart once the energy has not improved by more than this over `patience`
    /// iterations; `None` runs every iteration.
    pub early_stop: Option<(f64, usize)>,
}

impl VqeConfig {
    /// Defaults: `M = 2N` layers, 10 restarts, 5000 iterations, checkpoints every 50.
    pub fn new(resources: ResourceSet, target: OperatorSum, initial: StateVector) -> Self {
        let n = resources.n_sites();
        Self {
            resources,
            target,
            initial,
            layers: 2 * n,
            restarts: 10,
            iterations: 5000,
            adam: AdamParams::default(),
            gradient: GradientMethod::Auto,
            seed: 0,
            checkpoint_every: 50,
            early_stop: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.restarts == 0 {
            return Err(domain("layers and restarts must be at least 1"));
        }
        let n = self.resources.n_sites();
        if self.target.n_sites() != n || self.initial.n_sites() != n {
            return Err(structural("target, initial state and resources differ in size"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Checkpoint {
    pub iteration: usize,
    #[serde(skip)]
    pub state: StateVector,
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VqeTrace {
    pub restart_id: usize,
    pub seed: u64,
    pub energies: Vec<f64>,
    pub best_energy: f64,
    pub best_params: Vec<LayerParams>,
    /// Circuit output at iteration 0 and every `checkpoint_every` iterations.
    pub checkpoints: Vec<Checkpoint>,
    /// Subspace weights at each checkpoint, filled by [`monitor_invariants`].
    pub subspace_weights: Vec<Vec<f64>>,
}

/// Circuit evaluator shared by the optimizer and the gradient checks.
pub struct Circuit {
    resources: ResourceSet,
    dense: Option<DenseResources>,
    target: OperatorSum,
    target_dense: Option<CMatrix>,
    initial: StateVector,
}

fn flatten(params: &[LayerParams]) -> Vec<f64> {
    params.iter().flat_map(|p| [p.omega, p.delta, p.dt]).collect()
}

fn unflatten(x: &[f64]) -> Vec<LayerParams> {
    x.chunks(3)
        .map(|c| LayerParams {
            omega: c[0],
            delta: c[1],
            dt: c[2],
        })
        .collect()
}

impl Circuit {
    pub fn new(resources: &ResourceSet, target: &OperatorSum, initial: &StateVector) -> Result<Self> {
        let n = resources.n_sites();
        if target.n_sites() != n || initial.n_sites() != n {
            return Err(structural("target, initial state and resources differ in size"));
        }
        let dense_path = initial.dim() <= DENSE_LIMIT;
        Ok(Self {
            resources: resources.clone(),
            dense: if dense_path { Some(DenseResources::new(resources)?) } else { None },
            target: target.clone(),
            target_dense: if dense_path { Some(target.to_dense()?) } else { None },
            initial: initial.clone(),
        })
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    fn apply_target(&self, x: &CVector) -> Result<CVector> {
        match &self.target_dense {
            Some(t) => Ok(t * x),
            None => self.target.apply(x),
        }
    }

    /// Output state of the circuit.
    pub fn state(&self, params: &[LayerParams]) -> Result<StateVector> {
        let mut psi = self.initial.clone();
        for p in params {
            psi = match &self.dense {
                Some(d) => apply_layer_dense(&psi, p, d)?,
                None => apply_layer(&psi, p, &self.resources)?,
            };
        }
        Ok(psi)
    }

    pub fn energy(&self, params: &[LayerParams]) -> Result<f64> {
        let psi = self.state(params)?;
        let t = self.apply_target(psi.amplitudes())?;
        Ok(psi.amplitudes().dotc(&t).re)
    }

    /// Central finite-difference gradient, ordered `(omega, delta, dt)` per layer.
    pub fn gradient_fd(&self, params: &[LayerParams]) -> Result<Vec<f64>> {
        let x = flatten(params);
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let h = FD_STEP * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            // Durations may leave their domain by one step; the layer formula extends smoothly.
            let ep = self.energy_unchecked(&unflatten(&xp))?;
            let em = self.energy_unchecked(&unflatten(&xm))?;
            g[i] = (ep - em) / (2.0 * h);
        }
        Ok(g)
    }

    fn energy_unchecked(&self, params: &[LayerParams]) -> Result<f64> {
        let mut psi = self.initial.amplitudes().clone();
        for p in params {
            psi = match &self.dense {
                Some(d) => d.eigen(p).propagate(&psi, p.dt),
                None => {
                    let h = self.resources.layer_hamiltonian(p.omega, p.delta);
                    krylov_expm(&|v: &CVector| h.apply(v), &psi, p.dt)?.0
                }
            };
        }
        let t = self.apply_target(&psi)?;
        Ok(psi.dotc(&t).re)
    }

    /// Energy and exact gradient on the dense path.
    ///
    /// With `H_j = W diag(l) W^T` and costate `chi_j = U_{j+1}^dagger ... U_M^dagger T psi_M`,
    /// `dE/dtheta_j = 2 Re <chi_j| dU_j |psi_{j-1}>`. For the field parameters
    /// `dU = W (Phi o (W^T H' W)) W^T` with the divided differences
    /// `Phi_ab = -i dt exp(-i dt (l_a + l_b)/2) sinc(dt (l_a - l_b)/2)`.
    pub fn energy_and_gradient(&self, params: &[LayerParams]) -> Result<(f64, Vec<f64>)> {
        let Some(dense) = &self.dense else {
            return Ok((self.energy(params)?, self.gradient_fd(params)?));
        };
        let eigs: Vec<LayerEigen> = params.iter().map(|p| dense.eigen(p)).collect();
        let mut states = Vec::with_capacity(params.len() + 1);
        states.push(self.initial.amplitudes().clone());
        for e in &eigs {
            let next = e.propagate(states.last().expect("nonempty"), e.dt);
            states.push(next);
        }
        let psi = states.last().expect("nonempty");
        let mut chi = self.apply_target(psi)?;
        let energy = psi.dotc(&chi).re;
        let d = psi.len();
        let mut grad = vec![0.0; 3 * params.len()];
        for j in (0..params.len()).rev() {
            let e = &eigs[j];
            let psi_j = &states[j + 1];
            let psi_prev = &states[j];
            // dt: dU psi_{j-1} = -i H psi_j.
            let hpsi = real_mul(&e.vectors, &{
                let mut y = real_t_mul(&e.vectors, psi_j);
                for (yi, &l) in y.iter_mut().zip(&e.values) {
                    *yi *= l;
                }
                y
            });
            grad[3 * j + 2] = 2.0 * chi.dotc(&hpsi).im;

            let a = real_t_mul(&e.vectors, &chi);
            let b = real_t_mul(&e.vectors, psi_prev);
            let k = CMatrix::from_fn(d, d, |p, q| {
                let (lp, lq) = (e.values[p], e.values[q]);
                let x = 0.5 * e.dt * (lp - lq);
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                let phi = Complex64::new(0.0, -e.dt * sinc) * Complex64::from_polar(1.0, -0.5 * e.dt * (lp + lq));
                a[p].conj() * phi * b[q]
            });
            // <chi|dU|psi> = sum_ij H'_ij (W K W^T)_ij; only the real part survives for real H'.
            let br: DMatrix<f64> = &e.vectors * k.map(|z| z.re) * e.vectors.transpose();
            grad[3 * j] = 2.0 * dense.omega.component_mul(&br).sum();
            grad[3 * j + 1] = -2.0 * (0..d).map(|i| dense.delta[i] * br[(i, i)]).sum::<f64>();

            // Costate before layer j.
            chi = e.propagate(&chi, -e.dt);
        }
        Ok((energy, grad))
    }
}

fn random_params(rng: &mut impl Rng, layers: usize) -> Vec<LayerParams> {
    (0..layers)
        .map(|_| LayerParams {
            omega: rng.random_range(OMEGA_RANGE.0..OMEGA_RANGE.1),
            delta: rng.random_range(DELTA_RANGE.0..DELTA_RANGE.1),
            dt: rng.random_range(DT_RANGE.0..DT_RANGE.1),
        })
        .collect()
}

fn run_restart(circuit: &Circuit, config: &VqeConfig, restart_id: usize) -> Result<VqeTrace> {
    let seed = derive_seed(config.seed, restart_id as u64);
    let mut rng = seeded_rng(seed);
    let mut x = flatten(&random_params(&mut rng, config.layers));
    let mut m = vec![0.0; x.len()];
    let mut v = vec![0.0; x.len()];
    let AdamParams { learning_rate, beta1, beta2, epsilon } = config.adam;
    let mut energies = Vec::with_capacity(config.iterations + 1);
    let mut best = (f64::INFINITY, x.clone());
    let mut checkpoints = Vec::new();
    let mut last_improvement = (f64::INFINITY, 0usize);
    for it in 0..=config.iterations {
        let params = unflatten(&x);
        let (e, g) = match config.gradient {
            GradientMethod::Auto => circuit.energy_and_gradient(&params)?,
            GradientMethod::FiniteDifference => (circuit.energy(&params)?, circuit.gradient_fd(&params)?),
        };
        energies.push(e);
        if e < best.0 {
            best = (e, x.clone());
        }
        if config.checkpoint_every > 0 && it % config.checkpoint_every == 0 {
            checkpoints.push(Checkpoint { iteration: it, state: circuit.state(&params)?, energy: e });
        }
        if let Some((tol, patience)) = config.early_stop {
            if e < last_improvement.0 - tol {
                last_improvement = (e, it);
            } else if it - last_improvement.1 >= patience {
                break;
            }
        }
        if it == config.iterations {
            break;
        }
        let t = (it + 1) as i32;
        for i in 0..x.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let mh = m[i] / (1.0 - beta1.powi(t));
            let vh = v[i] / (1.0 - beta2.powi(t));
            x[i] -= learning_rate * mh / (vh.sqrt() + epsilon);
        }
        // Durations stay nonnegative by projection.
        for i in (2..x.len()).step_by(3) {
            x[i] = x[i].max(0.0);
        }
    }
    Ok(VqeTrace {
        restart_id,
        seed,
        energies,
        best_energy: best.0,
        best_params: unflatten(&best.1),
        checkpoints,
        subspace_weights: Vec::new(),
    })
}

/// Runs every restart in parallel; traces are ordered by restart id.
pub fn optimize(config: &VqeConfig) -> Result<Vec<VqeTrace>> {
    config.validate()?;
    let circuit = Circuit::new(&config.resources, &config.target, &config.initial)?;
    (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(&circuit, config, r))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub checkpoints: usize,
    /// `max_{t, j} | ||P_j psi(t)||^2 - ||P_j psi_0||^2 |`.
    pub max_deviation: f64,
    /// `max_t | ||psi(t)|| - 1 |`.
    pub max_norm_error: f64,
    pub initial_weights: Vec<f64>,
}

/// Isotypic weights followed by the irreducible weights of every split block.
fn subspace_weights(tree: &ProjectorTree, psi: &CVector) -> Vec<f64> {
    let reduced: Vec<CVector> = tree.isotypic().iter().map(|b| b.isometry().ad_mul(psi)).collect();
    let mut w: Vec<f64> = reduced.iter().map(|r| r.norm_squared()).collect();
    for (j, r) in reduced.iter().enumerate() {
        if let Some(split) = tree.irreducible(j) {
            w.extend(split.blocks.iter().map(|b| b.basis().ad_mul(r).norm_squared()));
        }
    }
    w
}

/// Deviation of the subspace weights of the checkpoint states from those of `initial`, and the
/// weights themselves stored on the trace.
pub fn monitor_invariants(trace: &mut VqeTrace, initial: &StateVector, tree: &ProjectorTree) -> Result<InvariantReport> {
    if initial.dim() != tree.d() {
        return Err(structural("initial state and projector tree differ in dimension"));
    }
    let w0 = subspace_weights(tree, initial.amplitudes());
    let mut max_deviation: f64 = 0.0;
    let mut max_norm_error: f64 = 0.0;
    trace.subspace_weights.clear();
    for c in &trace.checkpoints {
        let w = subspace_weights(tree, c.state.amplitudes());
        for (a, b) in w.iter().zip(&w0) {
            max_deviation = max_deviation.max((a - b).abs());
        }
        max_norm_error = max_norm_error.max((c.state.norm() - 1.0).abs());
        trace.subspace_weights.push(w);
    }
    Ok(InvariantReport {
        checkpoints: trace.checkpoints.len(),
        max_deviation,
        max_norm_error,
        initial_weights: w0,
    })
}

/// Lowest eigenvalues of `h`, ascending.
pub fn lowest_eigenvalues(h: &OperatorSum, count: usize) -> Result<Vec<f64>> {
    let mut vals = herm_eigenvalues(h.to_dense()?);
    vals.truncate(count);
    Ok(vals)
}

/// CSV with columns `iteration,restart,energy`.
pub fn write_trace_csv(traces: &[VqeTrace], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "iteration,restart,energy")?;
    for t in traces {
        for (i, e) in t.energies.iter().enumerate() {
            writeln!(out, "{i},{},{e:.12e}", t.restart_id)?;
        }
    }
    Ok(())
}

/// Number of restarts whose best energy is within `tol` of `ground`.
pub fn successes(traces: &[VqeTrace], ground: f64, tol: f64) -> usize {
    traces.iter().filter(|t| t.best_energy - ground <= tol).count()
}
