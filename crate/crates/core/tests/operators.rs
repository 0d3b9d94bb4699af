use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use reachkit::linalg::{cmul, frobenius};
use reachkit::operators::*;

fn random_sum(n: usize, terms: &[(usize, f64)]) -> OperatorSum {
    let d = 1usize << (2 * n);
    OperatorSum::from_terms(n, terms.iter().map(|&(i, c)| (PauliString::from_index(n, i % d), c))).unwrap()
}

fn sum_strategy(n: usize) -> impl Strategy<Value = OperatorSum> {
    prop::collection::vec((0usize..(1 << (2 * n)), -2.0f64..2.0), 1..8).prop_map(move |t| random_sum(n, &t))
}

fn triple(n: usize) -> impl Strategy<Value = (OperatorSum, OperatorSum, OperatorSum)> {
    (sum_strategy(n), sum_strategy(n), sum_strategy(n))
}

fn hermitian_commutator_dense(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (cmul(a, b) - cmul(b, a)) * Complex64::new(0.0, -1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(0x0BEE), ..ProptestConfig::default() })]

    #[test]
    fn coefficient_inner_product_is_normalized_trace((a, b, _) in triple(3)) {
        let da = a.to_dense().unwrap();
        let db = b.to_dense().unwrap();
        let trace: Complex64 = (da.adjoint() * db).trace() / 8.0;
        prop_assert!((a.inner(&b).unwrap() - trace.re).abs() < 1e-12);
        prop_assert!(trace.im.abs() < 1e-12);
    }

    #[test]
    fn commutator_matches_dense_arithmetic((a, b, _) in triple(3)) {
        let expected = hermitian_commutator_dense(&a.to_dense().unwrap(), &b.to_dense().unwrap());
        let got = a.commutator(&b).unwrap().to_dense().unwrap();
        prop_assert!(frobenius(&(got - expected)) < 1e-12);
    }

    #[test]
    fn jacobi_identity((a, b, c) in triple(3)) {
        let t1 = a.commutator(&b.commutator(&c).unwrap()).unwrap();
        let t2 = b.commutator(&c.commutator(&a).unwrap()).unwrap();
        let t3 = c.commutator(&a.commutator(&b).unwrap()).unwrap();
        let total = t1.add_scaled(&t2, 1.0).unwrap().add_scaled(&t3, 1.0).unwrap();
        prop_assert!(total.norm() < 1e-10, "Jacobi defect {}", total.norm());
    }

    #[test]
    fn commutator_is_antisymmetric((a, b, _) in triple(2)) {
        let ab = a.commutator(&b).unwrap();
        let ba = b.commutator(&a).unwrap();
        prop_assert!(ab.add_scaled(&ba, 1.0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn pauli_product_matches_dense(i in 0usize..256, j in 0usize..256) {
        let a = PauliString::from_index(4, i);
        let b = PauliString::from_index(4, j);
        let (phase, c) = pauli_product(&a, &b).unwrap();
        let dense = |p: &PauliString| OperatorSum::single(*p, 1.0).to_dense().unwrap();
        let lhs = cmul(&dense(&a), &dense(&b));
        let rhs = dense(&c) * phase.to_complex();
        prop_assert!(frobenius(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn distinct_strings_are_trace_orthogonal(i in 0usize..64, j in 0usize..64) {
        let a = OperatorSum::single(PauliString::from_index(3, i), 1.0).to_dense().unwrap();
        let b = OperatorSum::single(PauliString::from_index(3, j), 1.0).to_dense().unwrap();
        let t = (a.adjoint() * b).trace() / 8.0;
        let expected = if i == j { 1.0 } else { 0.0 };
        prop_assert!((t - Complex64::new(expected, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn resource_set_is_ring_symmetric(n in 3usize..9, shift in 1usize..8) {
        let set = build_resource_set(&RingGeometry::unit(n)).unwrap();
        for op in set.to_vec() {
            prop_assert_eq!(op.rotated(shift % n), op);
        }
    }
}

#[test]
fn square_ring_diagonal_coupling_follows_chord_length() {
    // Chord between opposite corners of the unit square is sqrt(2).
    let g = RingGeometry::unit(4);
    let chord = 2.0 * g.radius() * (std::f64::consts::PI * 2.0 / 4.0).sin();
    assert!((chord - 2f64.sqrt()).abs() < 1e-14);
    let set = build_resource_set(&g).unwrap();
    let zz = |a: usize, b: usize| {
        set.drift.coeff(&PauliString::identity(4).with(a, Pauli::Z).with(b, Pauli::Z))
    };
    assert!((zz(0, 1) - 1.0).abs() < 1e-14);
    assert!((zz(0, 2) - chord.powi(-6)).abs() < 1e-14);
    assert!((zz(0, 2) - 0.125).abs() < 1e-14);
}

#[test]
fn triangle_pairs_are_equilateral() {
    let set = build_resource_set(&RingGeometry::unit(3)).unwrap();
    let coeffs: Vec<f64> = set.drift.terms().map(|(_, c)| c).collect();
    assert_eq!(coeffs.len(), 3);
    assert!(coeffs.iter().all(|c| (c - 1.0).abs() < 1e-14));
}

#[test]
fn drift_commutes_with_detuning_for_every_size() {
    for n in 2..=10 {
        let set = build_resource_set(&RingGeometry::unit(n)).unwrap();
        assert!(set.delta.commutator(&set.drift).unwrap().is_empty(), "n = {n}");
    }
}

#[test]
fn detuning_dense_forms() {
    let z1 = OperatorSum::single(PauliString::single(1, 0, Pauli::Z), 1.0);
    assert_eq!(z1.diagonal().unwrap(), [1.0, -1.0]);
    let set = build_resource_set(&RingGeometry::unit(2)).unwrap();
    assert_eq!(set.delta.diagonal().unwrap(), [2.0, 0.0, 0.0, -2.0]);
}

#[test]
fn model_term_counts_and_limits() {
    assert_eq!(build_ising(3, 1.0, 1.0, 1.0).unwrap().len(), 9);
    assert_eq!(build_heisenberg(3, 1.0, 1.0).unwrap().len(), 12);
    let pure = build_ising(5, 0.0, 0.0, 0.7).unwrap();
    assert_eq!(pure.len(), 5);
    assert!(pure.terms().all(|(p, c)| p.weight() == 2 && p.x_mask() == 0 && (c - 0.7).abs() < 1e-15));
}

fn kron_chain(ops: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, m| acc.kronecker(m))
}

/// Heisenberg ring assembled from explicit Kronecker products, site 0 leftmost.
fn heisenberg_by_kron(n: usize, h: f64, j: f64) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let id = DMatrix::<Complex64>::identity(2, 2);
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let y = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let place = |sites: &[(usize, &DMatrix<Complex64>)]| {
        let ops: Vec<_> = (0..n)
            .map(|k| sites.iter().find(|(s, _)| *s == k).map(|(_, m)| (*m).clone()).unwrap_or(id.clone()))
            .collect();
        kron_chain(&ops)
    };
    let d = 1 << n;
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for k in 0..n {
        out += place(&[(k, &z)]) * c(h, 0.0);
        for p in [&x, &y, &z] {
            out += place(&[(k, p), ((k + 1) % n, p)]) * c(j, 0.0);
        }
    }
    out
}

#[test]
fn heisenberg_ground_space_matches_brute_force() {
    let h = build_heisenberg(4, 1.0, 1.0).unwrap();
    let oracle = heisenberg_by_kron(4, 1.0, 1.0);
    assert!(frobenius(&(h.to_dense().unwrap() - &oracle)) < 1e-12);
    let vals = oracle.clone().symmetric_eigen().eigenvalues;
    let lowest = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let ground = reachkit::reachability::ground_space(&h, 1e-8).unwrap();
    assert!((ground.energy - lowest).abs() < 1e-10);
    let expected_degeneracy = vals.iter().filter(|&&v| v - lowest < 1e-8).count();
    assert_eq!(ground.degeneracy(), expected_degeneracy);
    for s in &ground.basis {
        let residual = &oracle * s.amplitudes() - s.amplitudes() * Complex64::new(lowest, 0.0);
        assert!(residual.norm() < 1e-10);
    }
}

#[test]
fn operator_json_round_trip() {
    let h = build_ising(4, 0.3, -1.2, 0.9).unwrap();
    let text = serde_json::to_string(&h).unwrap();
    let back: OperatorSum = serde_json::from_str(&text).unwrap();
    assert_eq!(back, h);
}
