mod common;

use anosov_core::boundary::{attracting_flag_pair, BoundaryPoint};
use anosov_core::classify::{
    classify, conical_on_boundary, is_horospherical, radial_direction_probe, radial_score, OrbitSequence, CONICAL_FLOOR,
    DEFAULT_DEPTH, POWER_DIST_CAP,
};
use anosov_core::group::{enumerate_ball, preset_reflection_deformation, preset_sym2_triangle, proximality_check, GroupElement, DEDUPE_TOL};
use anosov_core::hilbert::{attracting_points, boundary_from_orbit, ProjPoint};
use anosov_core::matrix::{CartanVector, SpdPoint};

fn attracting_target(g: &GroupElement) -> BoundaryPoint {
    let flag = attracting_flag_pair(g.mat(), g.inv_mat(), 1e-9).unwrap();
    let theta = g.jordan().unwrap().chamber_angle().unwrap();
    BoundaryPoint::regular(flag, &CartanVector::from_chamber_angle(theta).unwrap()).unwrap()
}

fn refl_element(word: &[i32]) -> GroupElement {
    preset_reflection_deformation(3, 3, 4, 2.0).unwrap().evaluate(word).unwrap()
}

#[test]
fn powers_are_radial_and_horospherical_toward_the_attracting_flag() {
    for word in [vec![1, 2, -1, -2], vec![1, 2, 1], vec![2, 1, 2, -1, 2]] {
        let g = refl_element(&word);
        let seq = OrbitSequence::powers_within(&g, 12, POWER_DIST_CAP).unwrap();
        let xi = attracting_target(&g);
        let r = classify(&seq, &xi, 1.0, 2000, serde_json::Value::Null).unwrap();
        // long translations fit only four powers under the cap, too few for the growth flag
        assert_eq!(r.verdicts.radial, seq.is_unbounded(), "{word:?}: {r:?}");
        assert!(r.radial_sup.unwrap() < 2.0 && r.growth_rate.abs() < 0.05, "{word:?}: {r:?}");
        assert!(r.verdicts.horospherical, "{word:?}: {:?}", r.busemann_trace);
        if word == [1, 2, 1] {
            assert!(r.verdicts.radial, "{r:?}");
        }
        let (horo, _) = is_horospherical(&OrbitSequence::powers_within(&g.inverse(), 12, POWER_DIST_CAP).unwrap(), &xi, 1.0).unwrap();
        assert!(!horo, "{word:?}");
    }
}

#[test]
fn radial_score_is_isometry_invariant() {
    let mut rng = common::rng(51);
    let g = refl_element(&[1, 2, -1, -2]);
    let seq = OrbitSequence::powers_within(&g, 12, POWER_DIST_CAP).unwrap();
    let xi = attracting_target(&g);
    let (sup, growth) = radial_score(&seq, &xi, 2000).unwrap();
    for _ in 0..3 {
        let h = GroupElement::from_matrix(common::random_unimodular(&mut rng, 3, 0.5)).unwrap();
        let moved: Vec<GroupElement> = seq.elements().iter().map(|e| h.mul(e).mul(&h.inverse())).collect();
        let base = SpdPoint::basepoint(3).translate(h.mat(), h.inv_mat());
        let seq2 = OrbitSequence::new(moved, base).unwrap();
        let (sup2, growth2) = radial_score(&seq2, &xi.act(h.mat()).unwrap(), 2000).unwrap();
        assert!((sup - sup2).abs() < 1e-5 * sup.max(1.0), "{sup} vs {sup2}");
        assert!((growth - growth2).abs() < 1e-5, "{growth} vs {growth2}");
    }
}

#[test]
fn probe_recovers_the_jordan_angle() {
    for word in [vec![1, 2, -1, -2], vec![1, -2, -1, 2], vec![1, 2, 1]] {
        let g = refl_element(&word);
        let theta = g.jordan().unwrap().chamber_angle().unwrap();
        let r = radial_direction_probe(&g, 0.02, 12).unwrap();
        assert!((r.best_direction - theta).abs() <= 0.02, "{word:?}: {} vs {theta}", r.best_direction);
        assert!(!r.cells.is_empty());
    }
    let ball = enumerate_ball(&preset_sym2_triangle(2, 3, 7).unwrap(), 5, DEDUPE_TOL).unwrap();
    let sym = ball
        .iter()
        .find(|g| g.word().len() >= 3 && proximality_check(g, 1e-9).biproximal)
        .unwrap();
    let r = radial_direction_probe(&sym, 0.02, 12).unwrap();
    assert!(r.best_direction.abs() <= 0.02, "{}", r.best_direction);
}

#[test]
fn attracting_points_are_conical_along_inverse_powers() {
    let pres = preset_reflection_deformation(3, 3, 4, 2.0).unwrap();
    let ball = enumerate_ball(&pres, 6, DEDUPE_TOL).unwrap();
    let omega = boundary_from_orbit(&ball, 1e-8).unwrap();
    let mut checked = 0;
    for (i, v) in attracting_points(&ball, 1e-9).into_iter().filter(|(i, _)| ball[*i].word().len() >= 2).take(5) {
        let g = &ball[i];
        assert!(proximality_check(g, 1e-9).biproximal);
        let p = ProjPoint::new(v).unwrap();
        let back: Vec<GroupElement> = (1..=6).map(|n| g.pow(-n)).collect();
        let (ok, sep) = conical_on_boundary(&back, &p, &omega, 16, CONICAL_FLOOR).unwrap();
        assert!(ok, "{:?}: {sep}", g.word());
        let fwd: Vec<GroupElement> = (1..=12).map(|n| g.pow(n)).collect();
        let (ok, sep) = conical_on_boundary(&fwd, &p, &omega, 16, CONICAL_FLOOR).unwrap();
        assert!(!ok, "{:?}: {sep}", g.word());
        checked += 1;
    }
    assert_eq!(checked, 5);
}

#[test]
fn default_depth_rejects_short_sequences() {
    let g = refl_element(&[1, 2, 1]);
    let seq = OrbitSequence::new(vec![g.clone()], SpdPoint::basepoint(3)).unwrap();
    let xi = attracting_target(&g);
    let (horo, trace) = is_horospherical(&seq, &xi, DEFAULT_DEPTH).unwrap();
    assert!(!horo);
    assert_eq!(trace.len(), 1);
}
