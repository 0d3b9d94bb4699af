use proptest::prelude::*;

use reachkit::lie::*;
use reachkit::operators::*;
use reachkit::rep::commutant;

fn resources(n: usize) -> Vec<OperatorSum> {
    build_resource_set(&RingGeometry::unit(n)).unwrap().to_vec()
}

fn random_set(n: usize, raw: &[Vec<(usize, f64)>]) -> Vec<OperatorSum> {
    let d = 1usize << (2 * n);
    raw.iter()
        .map(|terms| OperatorSum::from_terms(n, terms.iter().map(|&(i, c)| (PauliString::from_index(n, i % d), c))).unwrap())
        .filter(|op| !op.is_empty())
        .collect()
}

fn generator_sets(n: usize) -> impl Strategy<Value = Vec<OperatorSum>> {
    prop::collection::vec(prop::collection::vec((1usize..(1 << (2 * n)), -1.5f64..1.5), 1..3), 1..4)
        .prop_map(move |raw| random_set(n, &raw))
        .prop_filter("needs a nonzero generator", |s| !s.is_empty())
}

fn combine(basis: &LieBasis, coords: &[f64]) -> OperatorSum {
    coords
        .iter()
        .enumerate()
        .fold(OperatorSum::zero(basis.n_sites()), |acc, (e, &c)| acc.add_scaled(&basis.element(e), c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, rng_seed: proptest::test_runner::RngSeed::Fixed(0x11E), ..ProptestConfig::default() })]

    #[test]
    fn closure_is_idempotent(gens in generator_sets(3)) {
        let basis = lie_closure(&gens, 64).unwrap();
        let again = lie_closure(&basis.elements(), 64).unwrap();
        prop_assert_eq!(again.dim(), basis.dim());
        prop_assert!(basis.closure_defect() < 1e-9);
    }

    #[test]
    fn closure_is_monotone(gens in generator_sets(2), extra in (1usize..16, -1.0f64..1.0)) {
        let base = lie_closure(&gens, 16).unwrap();
        let h = OperatorSum::single(PauliString::from_index(2, extra.0), extra.1.abs() + 0.1);
        let mut more = gens.clone();
        more.push(h);
        let bigger = lie_closure(&more, 16).unwrap();
        prop_assert!(bigger.dim() >= base.dim());
        for g in &gens {
            prop_assert!(bigger.contains(g, 1e-9).unwrap());
        }
    }

    #[test]
    fn decomposition_is_consistent(gens in generator_sets(2)) {
        let basis = lie_closure(&gens, 16).unwrap();
        let ib = reductive_decomposition_seeded(&basis, 5).unwrap();
        let dec = &ib.decomposition;
        prop_assert_eq!(dec.components.iter().map(|c| c.dim).sum::<usize>(), basis.dim());
        prop_assert_eq!(dec.components.iter().filter(|c| c.is_abelian()).count(), dec.center_dim);
        // Distinct ideals commute element by element.
        for a in 0..ib.ideals.len() {
            for b in (a + 1)..ib.ideals.len() {
                for x in ib.ideals[a].column_iter() {
                    for y in ib.ideals[b].column_iter() {
                        let xa = combine(&basis, x.as_slice());
                        let yb = combine(&basis, y.as_slice());
                        prop_assert!(xa.commutator(&yb).unwrap().norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn fast_center_dimension_counts_center_basis(gens in generator_sets(2)) {
        let c = commutant(2, &gens).unwrap();
        let fast = center_dimension_fast(&gens, &c).unwrap();
        let basis = center_basis(&gens, &c).unwrap();
        prop_assert_eq!(fast, basis.len());
        let closure = lie_closure(&gens, 16).unwrap();
        for z in &basis {
            prop_assert!(closure.contains(z, 1e-8).unwrap());
            for g in &gens {
                prop_assert!(z.commutator(g).unwrap().norm() < 1e-8);
            }
        }
    }
}

#[test]
fn su2_from_two_paulis() {
    let x = OperatorSum::single(PauliString::single(1, 0, Pauli::X), 1.0);
    let z = OperatorSum::single(PauliString::single(1, 0, Pauli::Z), 1.0);
    assert_eq!(lie_closure(&[x, z], 3).unwrap().dim(), 3);
}

#[test]
fn small_resource_closures() {
    let three = lie_closure(&resources(3), 64).unwrap();
    assert_eq!(three.dim(), 19);
    let dec = reductive_decomposition(&three).unwrap();
    assert_eq!(dec.label(), "su(4)+su(2)+u(1)");

    let four = lie_closure(&resources(4), 256).unwrap();
    let dec = reductive_decomposition(&four).unwrap();
    let labels: Vec<_> = dec.components.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, ["su(6)", "su(3)", "su(3)", "u(1)"]);
}

#[test]
fn adiabatic_pair_closures() {
    let ex = build_adiabatic_examples(3).unwrap();
    let dims: Vec<usize> = [&ex.h1, &ex.h2, &ex.h3]
        .iter()
        .map(|h| lie_closure(&[ex.h0.clone(), (*h).clone()], 64).unwrap().dim())
        .collect();
    assert_eq!(dims, [2, 39, 63]);
    let abelian = reductive_decomposition(&lie_closure(&[ex.h0.clone(), ex.h1.clone()], 64).unwrap()).unwrap();
    assert_eq!(abelian.label(), "2u(1)");
    let mixed = reductive_decomposition(&lie_closure(&[ex.h0.clone(), ex.h2.clone()], 64).unwrap()).unwrap();
    assert_eq!(mixed.label(), "su(6)+su(2)+u(1)");
}

#[test]
fn simulability_examples() {
    let three = simulability_check(&resources(3), &build_heisenberg(3, 1.0, 1.0).unwrap()).unwrap();
    assert!(three.simulable);
    assert_eq!(three.dim_gap, 0);
    let four = simulability_check(&resources(4), &build_heisenberg(4, 1.0, 1.0).unwrap()).unwrap();
    assert!(!four.simulable);
    assert_eq!(four.dim_gap, 1);
    let own = simulability_check(&resources(4), &resources(4)[1]).unwrap();
    assert!(own.simulable && own.dim_gap == 0);
}

#[test]
fn center_examples() {
    let r3 = resources(3);
    let c3 = commutant(3, &r3).unwrap();
    assert_eq!(center_basis(&r3, &c3).unwrap().len(), 1);

    let mut r4 = resources(4);
    r4.push(build_heisenberg(4, 1.0, 1.0).unwrap());
    let c4 = commutant(4, &r4).unwrap();
    assert_eq!(center_basis(&r4, &c4).unwrap().len(), 2);
    assert_eq!(center_dimension_fast(&r4, &c4).unwrap(), 2);

    let z = OperatorSum::single(PauliString::single(1, 0, Pauli::Z), 1.0);
    let cz = commutant(1, std::slice::from_ref(&z)).unwrap();
    let basis = center_basis(std::slice::from_ref(&z), &cz).unwrap();
    assert_eq!(basis.len(), 1);
    assert!((basis[0].inner(&z).unwrap().abs() - 1.0).abs() < 1e-12);
}

#[test]
fn traceless_generators_without_commutant_overlap_have_no_center() {
    // X and Z on one qubit act irreducibly: the commutant is the identity span, which is
    // orthogonal to both traceless generators.
    let gens = [
        OperatorSum::single(PauliString::single(1, 0, Pauli::X), 1.0),
        OperatorSum::single(PauliString::single(1, 0, Pauli::Z), 0.5),
    ];
    let c = commutant(1, &gens).unwrap();
    assert_eq!(c.dimension(), 1);
    assert_eq!(center_dimension_fast(&gens, &c).unwrap(), 0);
    assert!(center_basis(&gens, &c).unwrap().is_empty());
}
