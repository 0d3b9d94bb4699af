use num_complex::Complex64;

use reachkit::lie::center_basis;
use reachkit::operators::*;
use reachkit::reachability::*;
use reachkit::rep::{commutant, isotypic_projectors, state_support, ProjectorTree};
use reachkit::StateVector;

fn resources(n: usize) -> Vec<OperatorSum> {
    build_resource_set(&RingGeometry::unit(n)).unwrap().to_vec()
}

fn tree(n: usize) -> ProjectorTree {
    let hams = resources(n);
    let c = commutant(n, &hams).unwrap();
    let mut t = isotypic_projectors(&c, &hams).unwrap();
    let mats: Vec<_> = hams.iter().map(|h| h.to_dense().unwrap()).collect();
    t.split_all(&mats).unwrap();
    t
}

fn report(n: usize, target: &OperatorSum, t: &ProjectorTree, level: Level) -> ReachabilityReport {
    let gs = ground_space(target, DEFAULT_DEGENERACY_TOL).unwrap();
    verdict(&default_initial_state(n).unwrap(), &gs.basis, t, level, SUPPORT_TOL).unwrap()
}

fn impact(n: usize, target: &OperatorSum) -> ImpactReport {
    let res = resources(n);
    let mut ext = res.clone();
    ext.push(target.clone());
    let z_res = center_basis(&res, &commutant(n, &res).unwrap()).unwrap();
    let z_ext = center_basis(&ext, &commutant(n, &ext).unwrap()).unwrap();
    let gs = ground_space(target, DEFAULT_DEGENERACY_TOL).unwrap();
    center_impact(&z_ext, &z_res, &tree(n), &default_initial_state(n).unwrap(), &gs.basis).unwrap()
}

#[test]
fn ground_space_examples() {
    assert_eq!(ground_space(&build_heisenberg(3, 1.0, 1.0).unwrap(), 1e-8).unwrap().degeneracy(), 2);
    for n in 2..=5 {
        let minus_detuning = build_resource_set(&RingGeometry::unit(n)).unwrap().delta.scaled(-1.0);
        let gs = ground_space(&minus_detuning, 1e-8).unwrap();
        assert_eq!(gs.degeneracy(), 1);
        assert!((gs.basis[0].amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(ground_space(&OperatorSum::identity(3).scaled(0.4), 1e-8).unwrap().degeneracy(), 8);
    assert!(ground_space(&OperatorSum::identity(2), -1.0).is_err());
}

#[test]
fn default_state_is_first_basis_vector() {
    let s = default_initial_state(3).unwrap();
    assert_eq!(s.dim(), 8);
    for i in 1..8 {
        assert_eq!(s.inner(&StateVector::basis(3, i)), Complex64::new(0.0, 0.0));
    }
    let sup = state_support(&s, &tree(3), SUPPORT_TOL).unwrap();
    let iso: Vec<_> = sup.iter().filter(|x| x.id.starts_with("iso:") && x.supported).map(|x| (x.id.as_str(), x.dim)).collect();
    assert_eq!(iso, [("iso:0", 4)]);
}

#[test]
fn heisenberg_verdicts_for_small_rings() {
    let t5 = tree(5);
    let r5 = report(5, &build_heisenberg(5, 1.0, 1.0).unwrap(), &t5, Level::Isotypic);
    assert!(r5.is_blocked());
    assert_eq!(r5.initial_support, ["iso:0"]);
    assert!(r5.target_support.iter().all(|s| s != "iso:0"));
    assert!(t5.isotypic()[0].dim() == 8);
    assert_eq!(r5.blocking_evidence.len(), 1 + r5.target_support.len());

    let t4 = tree(4);
    let r4 = report(4, &build_heisenberg(4, 1.0, 1.0).unwrap(), &t4, Level::Irreducible);
    assert_eq!(r4.verdict, Verdict::NotBlocked);
    assert_eq!(r4.initial_support, r4.target_support);
    assert_eq!(t4.isotypic()[0].dim(), 6);
}

#[test]
fn identical_initial_and_target_is_never_blocked() {
    let t = tree(4);
    let s = default_initial_state(4).unwrap();
    for level in [Level::Isotypic, Level::Irreducible] {
        let r = verdict(&s, std::slice::from_ref(&s), &t, level, SUPPORT_TOL).unwrap();
        assert_eq!(r.verdict, Verdict::NotBlocked);
        assert!(r.blocking_evidence.is_empty());
        assert!(r.advisories.is_empty());
    }
}

#[test]
fn ising_is_never_blocked_on_small_rings() {
    for n in 3..=7 {
        let r = report(n, &build_ising(n, 1.0, 1.0, 1.0).unwrap(), &tree(n), Level::Irreducible);
        assert_eq!(r.verdict, Verdict::NotBlocked, "n = {n}");
    }
}

#[test]
fn isotypic_fallback_when_unsplit() {
    let hams = resources(3);
    let c = commutant(3, &hams).unwrap();
    let t = isotypic_projectors(&c, &hams).unwrap();
    let r = report(3, &build_heisenberg(3, 1.0, 1.0).unwrap(), &t, Level::Irreducible);
    assert_eq!(r.level, Level::Isotypic);
    assert!(!r.warnings.is_empty());
    assert!(r.is_blocked());
}

#[test]
fn profile_mismatch_is_advised() {
    // Same support set, different weight profile.
    let t = tree(3);
    let a = suggest_initial_states(&t, "iso:0", 1).unwrap().remove(0);
    let b = suggest_initial_states(&t, "iso:1", 1).unwrap().remove(0);
    let mix = |x: f64| {
        let v = a.amplitudes() * Complex64::new(x.sqrt(), 0.0) + b.amplitudes() * Complex64::new((1.0 - x).sqrt(), 0.0);
        StateVector::normalized(3, v).unwrap()
    };
    let r = verdict(&mix(0.5), &[mix(0.2)], &t, Level::Isotypic, SUPPORT_TOL).unwrap();
    assert_eq!(r.verdict, Verdict::NotBlocked);
    assert!(r.advisories.iter().any(|m| m.starts_with("profile-obstructed")));
}

#[test]
fn borderline_weights_are_reported() {
    let t = tree(3);
    let a = suggest_initial_states(&t, "iso:0", 1).unwrap().remove(0);
    let b = suggest_initial_states(&t, "iso:1", 1).unwrap().remove(0);
    let w: f64 = 1e-10;
    let v = a.amplitudes() * Complex64::new((1.0 - w).sqrt(), 0.0) + b.amplitudes() * Complex64::new(w.sqrt(), 0.0);
    let s = StateVector::normalized(3, v).unwrap();
    let r = verdict(&s, &[a], &t, Level::Isotypic, SUPPORT_TOL).unwrap();
    assert_eq!(r.verdict, Verdict::NotBlocked);
    assert!(r.warnings.iter().any(|m| m.contains("near the support threshold")));
}

#[test]
fn suggested_states_from_the_seven_dimensional_block() {
    let t = tree(6);
    let (j, block) = t.isotypic().iter().enumerate().find(|(_, b)| b.dim() == 7).unwrap();
    let id = format!("iso:{j}");
    let states = suggest_initial_states(&t, &id, 7).unwrap();
    assert_eq!(states.len(), 7);
    assert!(suggest_initial_states(&t, &id, 8).is_err());
    assert_eq!(block.multiplicity(), 1);
    for (a, s) in states.iter().enumerate() {
        for b in &states[a..] {
            let expected = if std::ptr::eq(s, b) { 1.0 } else { 0.0 };
            assert!((s.inner(b) - Complex64::new(expected, 0.0)).norm() < 1e-12);
        }
        let sup = state_support(s, &t, SUPPORT_TOL).unwrap();
        let w = sup.iter().find(|x| x.id == id).unwrap().weight;
        assert!((w - 1.0).abs() < 1e-12);
    }
    assert!(suggest_initial_states(&t, "iso:99", 1).is_err());
    assert!(suggest_initial_states(&t, "bogus", 1).is_err());
}

#[test]
fn center_impact_examples() {
    assert_eq!(impact(4, &build_heisenberg(4, 1.0, 1.0).unwrap()).impact, Impact::None);
    let six = impact(6, &build_heisenberg(6, 1.0, 1.0).unwrap());
    assert_eq!(six.impact, Impact::Possible);
    assert_eq!(six.extra_dim, 1);
    assert_eq!(impact(8, &build_ising(8, 1.0, 1.0, 1.0).unwrap()).impact, Impact::None);
}

#[test]
fn level_names_parse() {
    assert_eq!("isotypic".parse::<Level>().unwrap(), Level::Isotypic);
    assert_eq!("irreducible".parse::<Level>().unwrap(), Level::Irreducible);
    assert!("irreps".parse::<Level>().is_err());
}
