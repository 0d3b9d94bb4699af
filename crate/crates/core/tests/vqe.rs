use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use reachkit::operators::*;
use reachkit::reachability::{default_initial_state, ground_space, subspace_isometry};
use reachkit::rep::{commutant, isotypic_projectors, ProjectorTree};
use reachkit::vqe::*;
use reachkit::StateVector;

type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `exp(-i t H)` by scaling and squaring of a truncated Taylor series.
fn expm_oracle(h: &CMat, t: f64) -> CMat {
    let a = h * Complex64::new(0.0, -t);
    let norm = a.norm();
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let a = a / c(2f64.powi(squarings as i32));
    let d = h.nrows();
    let mut term = CMat::identity(d, d);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / c(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn resources(n: usize) -> ResourceSet {
    build_resource_set(&RingGeometry::unit(n)).unwrap()
}

fn tree(n: usize) -> ProjectorTree {
    let hams = resources(n).to_vec();
    let c = commutant(n, &hams).unwrap();
    let mut t = isotypic_projectors(&c, &hams).unwrap();
    let mats: Vec<_> = hams.iter().map(|h| h.to_dense().unwrap()).collect();
    t.split_all(&mats).unwrap();
    t
}

fn random_state(n: usize, raw: &[(f64, f64)]) -> StateVector {
    let v = DVector::from_fn(1 << n, |i, _| Complex64::new(raw[i].0, raw[i].1));
    StateVector::normalized(n, v).unwrap()
}

fn params_strategy(layers: usize) -> impl Strategy<Value = Vec<LayerParams>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.0f64..3.0), layers)
        .prop_map(|v| v.into_iter().map(|(o, d, t)| LayerParams::new(o, d, t).unwrap()).collect())
}

fn amplitudes_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, rng_seed: proptest::test_runner::RngSeed::Fixed(0x7E5), ..ProptestConfig::default() })]

    #[test]
    fn krylov_and_dense_layers_agree_with_oracle(raw in amplitudes_strategy(4), p in params_strategy(1)) {
        let res = resources(4);
        let psi = random_state(4, &raw);
        let dense = DenseResources::new(&res).unwrap();
        let a = apply_layer(&psi, &p[0], &res).unwrap();
        let b = apply_layer_dense(&psi, &p[0], &dense).unwrap();
        let h = res.layer_hamiltonian(p[0].omega, p[0].delta).to_dense().unwrap();
        let expected = expm_oracle(&h, p[0].dt) * psi.amplitudes();
        prop_assert!((a.amplitudes() - &expected).norm() < 1e-9);
        prop_assert!((b.amplitudes() - &expected).norm() < 1e-9);
    }

    #[test]
    fn krylov_exponential_is_unitary(x in amplitudes_strategy(5), y in amplitudes_strategy(5), t in -3.0f64..3.0) {
        // Unnormalized inputs: norms and overlaps survive propagation.
        let h = build_heisenberg(5, 0.7, 1.0).unwrap();
        let mv = |v: &DVector<Complex64>| h.apply(v);
        let u = DVector::from_fn(32, |i, _| Complex64::new(x[i].0, x[i].1));
        let v = DVector::from_fn(32, |i, _| Complex64::new(y[i].0, y[i].1));
        let (uu, _) = krylov_expm(&mv, &u, t).unwrap();
        let (vv, _) = krylov_expm(&mv, &v, t).unwrap();
        prop_assert!((uu.norm() - u.norm()).abs() < 1e-10 * u.norm().max(1.0));
        prop_assert!((uu.dotc(&vv) - u.dotc(&v)).norm() < 1e-10 * (u.norm() * v.norm()).max(1.0));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(p in params_strategy(4)) {
        let res = resources(3);
        let target = build_heisenberg(3, 1.0, 1.0).unwrap();
        let circuit = Circuit::new(&res, &target, &default_initial_state(3).unwrap()).unwrap();
        prop_assert!(circuit.is_dense());
        let (e, g) = circuit.energy_and_gradient(&p).unwrap();
        let fd = circuit.gradient_fd(&p).unwrap();
        prop_assert!((e - circuit.energy(&p).unwrap()).abs() < 1e-12);
        let scale = g.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() < 1e-5 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn circuit_energy_respects_variational_bound(p in params_strategy(3)) {
        let res = resources(3);
        let target = build_ising(3, 1.0, 1.0, 1.0).unwrap();
        let floor = lowest_eigenvalues(&target, 1).unwrap()[0];
        let circuit = Circuit::new(&res, &target, &default_initial_state(3).unwrap()).unwrap();
        prop_assert!(circuit.energy(&p).unwrap() >= floor - 1e-10);
        prop_assert!((circuit.state(&p).unwrap().norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn zero_duration_is_identity_and_zero_drive_only_adds_phases() {
    let res = resources(3);
    let psi = random_state(3, &[(0.3, 0.1), (-0.2, 0.5), (0.0, 0.4), (0.7, 0.0), (0.1, 0.1), (0.2, -0.3), (0.0, 0.0), (-0.6, 0.2)]);
    let dense = DenseResources::new(&res).unwrap();
    let still = LayerParams::new(1.3, -0.4, 0.0).unwrap();
    assert_eq!(apply_layer(&psi, &still, &res).unwrap(), psi);
    assert!((apply_layer_dense(&psi, &still, &dense).unwrap().amplitudes() - psi.amplitudes()).norm() < 1e-14);

    // Omega = 0 leaves a diagonal generator: magnitudes stay, phases follow the diagonal.
    let p = LayerParams::new(0.0, 0.8, 1.1).unwrap();
    let h = res.layer_hamiltonian(0.0, 0.8);
    let diag = h.diagonal().unwrap();
    for out in [apply_layer(&psi, &p, &res).unwrap(), apply_layer_dense(&psi, &p, &dense).unwrap()] {
        for i in 0..8 {
            let expected = psi.amplitudes()[i] * Complex64::from_polar(1.0, -1.1 * diag[i]);
            assert!((out.amplitudes()[i] - expected).norm() < 1e-12);
        }
    }
    assert!(LayerParams::new(0.0, 0.0, -1.0).is_err());
    assert!(LayerParams::new(f64::NAN, 0.0, 1.0).is_err());
}

#[test]
fn energy_examples() {
    let delta = resources(2).delta;
    assert!((energy(&StateVector::basis(2, 0), &delta).unwrap() - 2.0).abs() < 1e-14);
    let h = build_heisenberg(4, 1.0, 1.0).unwrap();
    let gs = ground_space(&h, 1e-8).unwrap();
    for s in &gs.basis {
        assert!((energy(s, &h).unwrap() - gs.energy).abs() < 1e-10);
    }
    let h3 = build_ising(3, 0.4, -0.9, 1.1).unwrap();
    let psi = random_state(3, &[(0.1, 0.9), (0.5, 0.0), (0.0, -0.3), (0.2, 0.2), (-0.4, 0.1), (0.6, 0.6), (0.3, -0.1), (0.0, 0.5)]);
    let m = h3.to_dense().unwrap();
    let brute = (psi.amplitudes().adjoint() * &m * psi.amplitudes())[(0, 0)];
    assert!((energy(&psi, &h3).unwrap() - brute.re).abs() < 1e-12);
    assert!(brute.im.abs() < 1e-12);
}

#[test]
fn optimizer_respects_blocked_subspace_bound() {
    // The circuit never leaves the isotypic components holding the initial state, so the
    // best energy is bounded by the target's minimum on the supported component.
    let n = 3;
    let t = tree(n);
    let target = build_heisenberg(n, 1.0, 1.0).unwrap();
    let v = subspace_isometry(&t, "iso:0").unwrap();
    let restricted = v.adjoint() * target.to_dense().unwrap() * &v;
    let bound = restricted.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let ground = lowest_eigenvalues(&target, 1).unwrap()[0];
    assert!(bound > ground + 1.0);

    let mut cfg = VqeConfig::new(resources(n), target, default_initial_state(n).unwrap());
    cfg.restarts = 3;
    cfg.iterations = 300;
    cfg.seed = 5;
    let traces = optimize(&cfg).unwrap();
    for tr in &traces {
        assert!(tr.energies.iter().all(|&e| e >= bound - 1e-9));
    }
    assert_eq!(successes(&traces, ground, 1e-3), 0);
}

#[test]
fn monitor_flags_symmetry_breaking_layers() {
    let n = 3;
    let t = tree(n);
    let res = resources(n);
    let init = default_initial_state(n).unwrap();
    let mut cfg = VqeConfig::new(res.clone(), build_ising(n, 1.0, 1.0, 1.0).unwrap(), init.clone());
    cfg.restarts = 1;
    cfg.iterations = 100;
    cfg.checkpoint_every = 10;
    let mut traces = optimize(&cfg).unwrap();
    let clean = monitor_invariants(&mut traces[0], &init, &t).unwrap();
    assert_eq!(clean.checkpoints, 11);
    assert!(clean.max_deviation < 1e-10);
    assert!(clean.max_norm_error < 1e-10);
    assert_eq!(traces[0].subspace_weights.len(), 11);

    // A single-site X rotation lies outside the resource algebra.
    let kick = OperatorSum::single(PauliString::single(n, 0, Pauli::X), 1.0).to_dense().unwrap();
    let u = expm_oracle(&kick, 0.4);
    let mut faulty = traces[0].clone();
    let last = faulty.checkpoints.last_mut().unwrap();
    last.state = StateVector::normalized(n, &u * last.state.amplitudes()).unwrap();
    let report = monitor_invariants(&mut faulty, &init, &t).unwrap();
    assert!(report.max_deviation > 1e-3);

    // Empty circuit: output equals input.
    let circuit = Circuit::new(&res, &cfg.target, &init).unwrap();
    assert_eq!(circuit.state(&[]).unwrap(), init);
    assert!(monitor_invariants(&mut faulty, &default_initial_state(4).unwrap(), &t).is_err());
}

#[test]
fn optimization_is_deterministic_given_seed() {
    let mut cfg = VqeConfig::new(resources(3), build_ising(3, 1.0, 1.0, 1.0).unwrap(), default_initial_state(3).unwrap());
    cfg.restarts = 2;
    cfg.iterations = 60;
    cfg.seed = 42;
    let a = optimize(&cfg).unwrap();
    let b = optimize(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.energies, y.energies);
        assert_eq!(x.best_params, y.best_params);
    }
    assert_ne!(a[0].seed, a[1].seed);
    cfg.seed = 43;
    assert_ne!(optimize(&cfg).unwrap()[0].energies, a[0].energies);

    let mut bad = cfg.clone();
    bad.layers = 0;
    assert!(optimize(&bad).is_err());
    bad = cfg.clone();
    bad.initial = default_initial_state(4).unwrap();
    assert!(optimize(&bad).is_err());
}

#[test]
fn finite_difference_and_early_stop_options() {
    let mut cfg = VqeConfig::new(resources(3), build_ising(3, 1.0, 1.0, 1.0).unwrap(), default_initial_state(3).unwrap());
    cfg.layers = 2;
    cfg.restarts = 1;
    cfg.iterations = 400;
    cfg.gradient = GradientMethod::FiniteDifference;
    let fd = optimize(&cfg).unwrap();
    cfg.gradient = GradientMethod::Auto;
    let exact = optimize(&cfg).unwrap();
    assert!((fd[0].best_energy - exact[0].best_energy).abs() < 1e-4);
    cfg.early_stop = Some((1e-9, 20));
    let short = optimize(&cfg).unwrap();
    assert!(short[0].energies.len() <= exact[0].energies.len());

    let mut csv = Vec::new();
    write_trace_csv(&exact, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + exact[0].energies.len());
}
