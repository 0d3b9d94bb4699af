use proptest::prelude::*;

use reachkit::adiabatic::*;
use reachkit::linalg::{frobenius, herm_eigenvalues};
use reachkit::operators::*;

fn examples() -> AdiabaticExamples {
    build_adiabatic_examples(3).unwrap()
}

#[test]
fn commuting_pair_crosses() {
    let ex = examples();
    let r = consistency_with_symmetry(&ex.h0, &ex.h1, 201).unwrap();
    assert_eq!(r.lie_dim, 2);
    assert_eq!(r.decomposition, "2u(1)");
    assert_eq!(r.irreducible_count(), 8);
    assert_eq!(r.subspaces.iter().filter(|g| g.len() == 2).count(), 2);
    let dims_of = |ids: &[String]| -> Vec<Vec<usize>> {
        ids.iter().map(|id| r.subspaces[id[4..].parse::<usize>().unwrap()].clone()).collect()
    };
    assert_eq!(dims_of(&r.initial_support), [vec![1]]);
    assert_eq!(dims_of(&r.target_support), [vec![1, 1]]);
    assert!(!r.compatible);
    assert_eq!(r.classification, GapClass::Crossing);
    assert!(r.min_gap.value < DEFAULT_ZERO_TOL);
    assert!((r.min_gap.tau_star - 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn shared_sector_pair_keeps_a_gap() {
    let ex = examples();
    let r = consistency_with_symmetry(&ex.h0, &ex.h2, 201).unwrap();
    assert_eq!(r.lie_dim, 39);
    assert_eq!(r.decomposition, "su(6)+su(2)+u(1)");
    assert_eq!(r.subspace_label, "6,2");
    assert!(r.compatible);
    assert_eq!(r.initial_support, r.target_support);
    assert_eq!(r.classification, GapClass::FiniteGap);
    assert!(r.min_gap.value > 1e-4);
}

#[test]
fn irreducible_pair_keeps_a_gap() {
    let ex = examples();
    let r = consistency_with_symmetry(&ex.h0, &ex.h3, 201).unwrap();
    assert_eq!(r.lie_dim, 63);
    assert_eq!(r.decomposition, "su(8)");
    assert_eq!(r.subspace_label, "8");
    assert!(r.compatible);
    assert_eq!(r.classification, GapClass::FiniteGap);
    assert!(r.min_gap.value > 0.01);
}

#[test]
fn constant_path_has_the_endpoint_gap() {
    let ex = examples();
    let s = sweep(&ex.h0, &ex.h0, 11).unwrap();
    let expected = ground_gap(&herm_eigenvalues(ex.h0.to_dense().unwrap()));
    assert!(s.gap.iter().all(|g| (g - expected).abs() < 1e-10));
    assert_eq!(gap_classification(&s, DEFAULT_ZERO_TOL), GapClass::FiniteGap);
}

#[test]
fn endpoints_match_direct_diagonalization() {
    let ex = examples();
    for ht in [&ex.h1, &ex.h2, &ex.h3] {
        let s = sweep(&ex.h0, ht, 21).unwrap();
        assert_eq!(s.tau_grid[0], 0.0);
        assert_eq!(*s.tau_grid.last().unwrap(), 1.0);
        for (spec, h) in [(&s.spectra[0], &ex.h0), (s.spectra.last().unwrap(), ht)] {
            let direct = herm_eigenvalues(h.to_dense().unwrap());
            for (a, b) in spec.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(s.tau_grid.windows(2).all(|w| w[0] < w[1]));
        assert!(s.gap.iter().all(|&g| g >= 0.0));
        assert!(s.bisections <= MAX_BISECTIONS);
        assert!(s.gap.iter().all(|&g| g >= s.min_gap.value));
    }
}

#[test]
fn ground_gap_examples() {
    assert_eq!(ground_gap(&[0.0, 1.0, 3.0]), 1.0);
    assert_eq!(ground_gap(&[-1.0, -1.0, 0.5]), 1.5);
    assert!(ground_gap(&[2.0, 2.0]).is_infinite());
}

#[test]
fn sweep_rejects_bad_input() {
    let ex = examples();
    assert!(sweep(&ex.h0, &ex.h1, 1).is_err());
    assert!(sweep(&ex.h0, &build_heisenberg(4, 1.0, 1.0).unwrap(), 11).is_err());
}

#[test]
fn csv_has_one_row_per_grid_point() {
    let ex = examples();
    let s = sweep(&ex.h0, &ex.h3, 9).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&s, Some(3), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,e0,e1,e2"));
    assert_eq!(lines.count(), s.tau_grid.len());
    assert!(serde_json::to_string(&s).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, rng_seed: proptest::test_runner::RngSeed::Fixed(0xAD1), ..ProptestConfig::default() })]

    #[test]
    fn levels_move_no_faster_than_the_perturbation(which in 0usize..3, grid in 5usize..40) {
        let ex = examples();
        let ht = [&ex.h1, &ex.h2, &ex.h3][which];
        let s = sweep(&ex.h0, ht, grid).unwrap();
        let bound = frobenius(&(ht.to_dense().unwrap() - ex.h0.to_dense().unwrap()));
        for w in 0..s.tau_grid.len() - 1 {
            let dt = s.tau_grid[w + 1] - s.tau_grid[w];
            for (a, b) in s.spectra[w].iter().zip(&s.spectra[w + 1]) {
                prop_assert!((a - b).abs() <= dt * bound + 1e-10);
            }
        }
    }
}
