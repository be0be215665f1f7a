mod common;

use anosov_core::boundary::opposite_involution;
use anosov_core::group::cache::{format_ball_cache, parse_ball_cache};
use anosov_core::group::{
    displacement_minimum, enumerate_ball, finite_order, is_freely_reduced, limit_cone, preset_fuchsian_triangle,
    preset_reflection_deformation, preset_sym2_triangle, proximality_check, qi_constants, GroupElement,
    Presentation, DEDUPE_TOL, MIN_NORM, QI_FLOOR,
};
use anosov_core::matrix::{Mat, SpdPoint};
use proptest::prelude::*;
use rand::Rng;

fn deformed() -> Presentation {
    preset_reflection_deformation(3, 3, 4, 2.0).unwrap()
}

#[test]
fn jordan_is_homogeneous_under_powers() {
    let ball = enumerate_ball(&deformed(), 5, DEDUPE_TOL).unwrap();
    for g in ball.iter().filter(|g| g.jordan().unwrap().norm() > 1e-3).take(60) {
        let l = g.jordan().unwrap();
        for n in [2, 3, 5] {
            let ln = g.pow(n).jordan().unwrap();
            for (a, b) in ln.coords().iter().zip(l.coords()) {
                assert!((a - n as f64 * b).abs() < 1e-7 * n as f64, "{:?} n={n}", g.word());
            }
        }
    }
}

#[test]
fn jordan_of_inverse_is_opposite() {
    let mut rng = common::rng(31);
    for _ in 0..60 {
        let g = GroupElement::from_matrix(common::random_unimodular(&mut rng, 3, 2.0)).unwrap();
        let a = opposite_involution(&g.jordan().unwrap());
        let b = g.inverse().jordan().unwrap();
        for (x, y) in a.coords().iter().zip(b.coords()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn translation_length_is_minimal_displacement() {
    let ball = enumerate_ball(&deformed(), 4, DEDUPE_TOL).unwrap();
    for g in ball.iter().filter(|g| proximality_check(g, 1e-9).biproximal).take(12) {
        let want = g.translation_length().unwrap();
        let got = displacement_minimum(g, 2000).unwrap();
        assert!((got - want).abs() < 1e-4, "{:?}: {got} vs {want}", g.word());
    }
}

#[test]
fn ball_words_are_shortlex_and_evaluate_back() {
    let p = preset_sym2_triangle(2, 3, 7).unwrap();
    let ball = enumerate_ball(&p, 6, DEDUPE_TOL).unwrap();
    assert!(ball.len() < 4 * 3usize.pow(5));
    for w in ball.windows(2) {
        assert!(w[0].word().len() <= w[1].word().len());
    }
    for g in &ball {
        assert!(is_freely_reduced(g.word()));
        let e = p.evaluate(g.word()).unwrap();
        assert!(e.mat().max_abs_diff(g.mat()) < 1e-9 * g.mat().max_abs());
    }
}

#[test]
fn free_group_ball_has_full_count() {
    let mut rng = common::rng(32);
    let a = common::random_unimodular(&mut rng, 3, 3.0);
    let b = common::random_unimodular(&mut rng, 3, 3.0);
    let ball = enumerate_ball(&Presentation::custom(vec![a, b]).unwrap(), 3, DEDUPE_TOL).unwrap();
    assert_eq!(ball.len(), 4 + 12 + 36);
}

#[test]
fn fuchsian_lift_has_torsion_or_positive_biproximality() {
    let ball = enumerate_ball(&preset_sym2_triangle(2, 3, 7).unwrap(), 8, DEDUPE_TOL).unwrap();
    for g in &ball {
        let p = proximality_check(g, 1e-9);
        assert!(p.positively_bi || finite_order(g, 14, 1e-8).is_some(), "{:?}", g.word());
    }
}

#[test]
fn fuchsian_triangle_relations_hold_up_to_sign() {
    let p = preset_fuchsian_triangle(2, 3, 7).unwrap();
    let minus = Mat::identity(2).scale(-1.0);
    let x = p.evaluate(&[1]).unwrap();
    let y = p.evaluate(&[2]).unwrap();
    assert!(x.pow(2).mat().max_abs_diff(&minus) < 1e-12);
    assert!(y.pow(3).mat().max_abs_diff(&minus) < 1e-12);
    let xy7 = x.mul(&y).pow(7);
    let off = xy7.mat().max_abs_diff(&minus).min(xy7.mat().max_abs_diff(&Mat::identity(2)));
    assert!(off < 1e-10, "{off}");
}

#[test]
fn cone_of_the_lift_is_a_single_ray() {
    let ball = enumerate_ball(&preset_sym2_triangle(2, 3, 7).unwrap(), 8, DEDUPE_TOL).unwrap();
    let cone = limit_cone(&ball, MIN_NORM).unwrap();
    assert!(cone.width() < 1e-3);
    assert!(cone.interval.0.abs() < 1e-3 && cone.interval.1.abs() < 1e-3);
}

#[test]
fn deformed_cone_is_wide_and_symmetric() {
    let ball = enumerate_ball(&deformed(), 8, DEDUPE_TOL).unwrap();
    let cone = limit_cone(&ball, MIN_NORM).unwrap();
    assert!(cone.width() > 1e-2);
    assert!(cone.iota_asymmetry < 0.02);
    let mut sorted: Vec<f64> = cone.samples.iter().map(|s| s.angle).collect();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(sorted.first().copied(), Some(cone.interval.0));
}

#[test]
fn orbit_maps_are_quasi_isometric() {
    let o = SpdPoint::basepoint(3);
    for p in [preset_sym2_triangle(2, 3, 7).unwrap(), deformed()] {
        let ball = enumerate_ball(&p, 7, DEDUPE_TOL).unwrap();
        let fit = qi_constants(&ball, &o, QI_FLOOR).unwrap();
        assert!(fit.verdict && fit.a_lower > 0.0 && fit.a_upper >= fit.a_lower);
        for (k, (lo, hi)) in fit.lengths.iter().zip(fit.d_min.iter().zip(&fit.d_max)) {
            let k = *k as f64;
            assert!(*lo >= fit.a_lower * k - fit.b_lower - 1e-9);
            assert!(*hi <= fit.a_upper * k + fit.b_upper + 1e-9);
        }
    }
}

#[test]
fn near_identity_generators_fail_the_qi_floor() {
    let mut rng = common::rng(33);
    let gens: Vec<Mat> = (0..2)
        .map(|_| {
            let e: Vec<f64> = (0..9)
                .map(|k| if k % 4 == 0 { 1.0 } else { 0.0 } + rng.random_range(-1e-2..1e-2))
                .collect();
            let m = Mat::from_row_slice(3, &e).unwrap();
            m.scale(m.det().powf(-1.0 / 3.0))
        })
        .collect();
    let ball = enumerate_ball(&Presentation::custom(gens).unwrap(), 6, DEDUPE_TOL).unwrap();
    let fit = qi_constants(&ball, &SpdPoint::basepoint(3), QI_FLOOR).unwrap();
    assert!(fit.a_lower < QI_FLOOR && !fit.verdict, "{}", fit.a_lower);
}

#[test]
fn cache_is_deterministic_and_round_trips() {
    let p = deformed();
    let a = enumerate_ball(&p, 5, DEDUPE_TOL).unwrap();
    let b = enumerate_ball(&p, 5, DEDUPE_TOL).unwrap();
    let desc = p.kind().descriptor();
    let ta = format_ball_cache(&desc, 5, &a).unwrap();
    let tb = format_ball_cache(&desc, 5, &b).unwrap();
    assert_eq!(ta, tb);
    let parsed = parse_ball_cache(&ta).unwrap();
    assert_eq!(parsed.entries.len(), a.len());
    assert_eq!(parsed.radius, 5);
    for (e, g) in parsed.entries.iter().zip(&a) {
        assert_eq!(e.word, g.word());
        assert_eq!(e.entries, g.mat().row_major());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cache_parser_never_panics(text in "\\PC{0,400}") {
        let _ = parse_ball_cache(&text);
    }

    #[test]
    fn cache_parser_survives_mutations(pos in 0usize..2000, byte in any::<u8>()) {
        let p = Presentation::single(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap();
        let ball = enumerate_ball(&p, 3, DEDUPE_TOL).unwrap();
        let mut text = format_ball_cache("single", 3, &ball).unwrap().into_bytes();
        let i = pos % text.len();
        text[i] = byte;
        if let Ok(s) = String::from_utf8(text) {
            let _ = parse_ball_cache(&s);
        }
    }
}
