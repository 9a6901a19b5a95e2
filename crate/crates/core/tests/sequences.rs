use std::f64::consts::PI;

use dmsim::linalg::{Mat, Mat4, C64};
use dmsim::model::TargetFamily;
use dmsim::quantum::{gate_fidelity, Qubit};
use dmsim::sequence::*;
use proptest::prelude::*;

fn fid(u: &Mat4, v: &Mat4) -> f64 {
    gate_fidelity(u, v)
}

#[test]
fn empty_sequence_is_identity() {
    let seq = PulseSequence::new("empty", Source::User, vec![]);
    assert_eq!(seq.compile(0.3, 1.0).unwrap(), Mat4::identity());
}

#[test]
fn single_pi_rotation() {
    let seq = PulseSequence::new("x", Source::User, vec![PulseElement::sqr(Qubit::One, PI, 0.0)]);
    let u = seq.compile(0.0, 0.0).unwrap();
    let mi = C64::new(0.0, -1.0);
    let z = C64::new(0.0, 0.0);
    // (−iσx) ⊗ I
    let want = Mat([[z, z, mi, z], [z, z, z, mi], [mi, z, z, z], [z, mi, z, z]]);
    assert!(u.max_abs_diff(&want) < 1e-15);
}

#[test]
fn decomposition_a_at_zero_time_is_identity() {
    for g in [0.0, 0.5, 1.0] {
        let u = decomposition_a_at(g, 0.0).unwrap().compile(0.0, 0.0).unwrap();
        assert!(fid(&u, &Mat4::identity()) >= 0.999);
    }
}

#[test]
#[allow(clippy::approx_constant)]
fn b_angles_sum_to_constant() {
    for &(g, t) in &[(0.0, 0.0), (0.4, 3.0), (1.0, 14.0)] {
        let ctx = EvalCtx::new(g, t);
        assert!((b_theta1().eval(&ctx) + b_theta().eval(&ctx) - 3.142).abs() < 1e-12);
    }
}

#[test]
fn full_dispatch_both_sides_of_one() {
    let tau = 2.7;
    let target = TargetFamily::DmXy.unitary(1.0, tau);
    let a = decomposition_a_at(1.0, tau).unwrap().compile(0.0, 0.0).unwrap();
    let b = decomposition_b_at(1.0, tau).unwrap().compile(0.0, 0.0).unwrap();
    assert!(fid(&a, &target) >= 0.999);
    assert!(fid(&b, &target) >= 0.999);
    let full = decomposition_full(0.5, tau).unwrap();
    assert_eq!(full.len(), 9);
    let full = decomposition_full(1.5, tau).unwrap();
    assert_eq!(full.len(), 8);
}

#[test]
fn nine_line_file_parses() {
    let text = write_sequence(&decomposition_a());
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 9);
    let seq = parse_sequence(&text).unwrap();
    assert_eq!(seq.len(), 9);
    assert_eq!(seq.source, Source::Published);
}

#[test]
fn malformed_tag_is_parse_error() {
    let err = parse_sequence("SQR q=1 theta=1 phi=0\nROT q=1 theta=1\n").unwrap_err();
    assert_eq!(err.line, 2);
}

#[test]
fn isolation_has_no_transverse_rotations() {
    let seq = isolate_zz(dmsim::model::HamiltonianKind::Xyz { j: 0.8 }, 0.2).unwrap();
    assert!(seq
        .elements
        .iter()
        .all(|e| !matches!(e, PulseElement::Sqr { .. })));
    assert_eq!(seq.count_sqr(Qubit::One) + seq.count_sqr(Qubit::Two), 0);
    let u = isolate_zz(dmsim::model::HamiltonianKind::Xyz { j: 0.8 }, 0.0)
        .unwrap()
        .compile(0.0, 0.0)
        .unwrap();
    assert!(fid(&u, &Mat4::identity()) > 1.0 - 1e-12);
}

fn element() -> impl Strategy<Value = PulseElement> {
    let q = prop_oneof![Just(Qubit::One), Just(Qubit::Two)];
    prop_oneof![
        (q.clone(), -7.0f64..7.0, -7.0f64..7.0).prop_map(|(q, t, p)| PulseElement::sqr(q, t, p)),
        (-3.0f64..3.0).prop_map(PulseElement::zz),
        (q, -7.0f64..7.0).prop_map(|(q, t)| PulseElement::zrot(q, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_a_random_points(g in 0.0f64..=1.0, t in 0.0f64..=15.0) {
        let u = decomposition_a_at(g, t).unwrap().compile(0.0, 0.0).unwrap();
        prop_assert!(fid(&u, &TargetFamily::DmXy.unitary(g, t)) >= 0.999);
    }

    #[test]
    fn structure_is_parameter_independent(g in 0.0f64..=1.0, t in -20.0f64..20.0) {
        let a = decomposition_a_at(g, t).unwrap();
        prop_assert_eq!((a.len(), a.count_zz(), a.count_sqr(Qubit::One), a.count_sqr(Qubit::Two)), (9, 2, 3, 4));
        let b = decomposition_b_at(g, t).unwrap();
        prop_assert_eq!((b.len(), b.count_zz(), b.count_sqr(Qubit::One), b.count_sqr(Qubit::Two)), (8, 2, 3, 3));
    }

    #[test]
    fn compile_distributes(
        left in prop::collection::vec(element(), 0..6),
        right in prop::collection::vec(element(), 0..6),
    ) {
        let s1 = PulseSequence::new("l", Source::User, left.clone());
        let s2 = PulseSequence::new("r", Source::User, right.clone());
        let joined = PulseSequence::new("lr", Source::User, [left, right].concat());
        // written order: the first part is the left factor
        let prod = s1.compile(0.0, 0.0).unwrap() * s2.compile(0.0, 0.0).unwrap();
        let u = joined.compile(0.0, 0.0).unwrap();
        prop_assert!(u.max_abs_diff(&prod) < 1e-12);
        prop_assert!(u.unitary_defect() < 1e-12);
    }

    #[test]
    fn text_round_trip(elements in prop::collection::vec(element(), 0..10)) {
        let seq = PulseSequence::new("random", Source::User, elements);
        prop_assert_eq!(parse_sequence(&write_sequence(&seq)).unwrap(), seq);
    }
}
