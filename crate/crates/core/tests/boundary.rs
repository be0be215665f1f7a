mod common;

use anosov_core::boundary::{attracting_flag_pair, eigen_frame3, flag_distance, is_opposite};
use anosov_core::group::{enumerate_ball, preset_reflection_deformation, preset_sym2_triangle, proximality_check, DEDUPE_TOL};
use anosov_core::hilbert::{
    boundary_from_orbit, conic_fit_residual, cross_ratio, hilbert_distance, hilbert_translation_length, regular_polygon,
    tangent_line_at, ConvexBody, ProjLine, ProjPoint,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn interior_point(omega: &ConvexBody, rng: &mut ChaCha8Rng) -> ProjPoint {
    let chart = omega.chart();
    let pts = omega.chart_points();
    let c = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
    let c = [c[0] / pts.len() as f64, c[1] / pts.len() as f64];
    let v = pts[rng.random_range(0..pts.len())];
    let s = rng.random_range(0.0..0.9);
    let q = [c[0] + s * (v[0] - c[0]), c[1] + s * (v[1] - c[1])];
    ProjPoint::new(chart.lift(&q)).unwrap()
}

#[test]
fn cross_ratio_is_projectively_invariant() {
    let mut rng = common::rng(41);
    for _ in 0..40 {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0];
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0];
        let at = |t: f64| ProjPoint::new([p[0] + t * v[0], p[1] + t * v[1], 1.0]).unwrap();
        let (a, x, y, b) = (at(-1.0), at(-0.2), at(0.4), at(1.3));
        let g = common::random_unimodular(&mut rng, 3, 1.0);
        let before = cross_ratio(&a, &x, &y, &b).unwrap();
        let after = cross_ratio(&a.act(&g).unwrap(), &x.act(&g).unwrap(), &y.act(&g).unwrap(), &b.act(&g).unwrap()).unwrap();
        assert!((before - after).abs() < 1e-8 * before.abs(), "{before} vs {after}");
    }
}

#[test]
fn hilbert_distance_is_a_projective_invariant_metric() {
    let mut rng = common::rng(42);
    let omega = regular_polygon(7).unwrap();
    for _ in 0..40 {
        let (x, y, z) = (
            interior_point(&omega, &mut rng),
            interior_point(&omega, &mut rng),
            interior_point(&omega, &mut rng),
        );
        let dxy = hilbert_distance(&omega, &x, &y).unwrap();
        assert!((dxy - hilbert_distance(&omega, &y, &x).unwrap()).abs() < 1e-10);
        assert!(dxy <= hilbert_distance(&omega, &x, &z).unwrap() + hilbert_distance(&omega, &z, &y).unwrap() + 1e-10);
        let g = common::random_unimodular(&mut rng, 3, 0.3);
        let g = anosov_core::matrix::Mat::identity(3).add(&g.scale(0.2));
        let moved = omega.transform(&g).unwrap();
        let d2 = hilbert_distance(&moved, &x.act(&g).unwrap(), &y.act(&g).unwrap()).unwrap();
        assert!((dxy - d2).abs() < 1e-7 * dxy.max(1.0), "{dxy} vs {d2}");
    }
}

#[test]
fn fuchsian_boundary_is_a_conic() {
    let ball = enumerate_ball(&preset_sym2_triangle(2, 3, 7).unwrap(), 8, DEDUPE_TOL).unwrap();
    let omega = boundary_from_orbit(&ball, 1e-8).unwrap();
    assert!(conic_fit_residual(&omega).unwrap() < 1e-5);
}

#[test]
fn deformed_boundary_is_not_a_conic_and_flags_are_transverse() {
    let ball = enumerate_ball(&preset_reflection_deformation(3, 3, 4, 2.0).unwrap(), 6, DEDUPE_TOL).unwrap();
    let omega = boundary_from_orbit(&ball, 1e-8).unwrap();
    assert!(conic_fit_residual(&omega).unwrap() > 1e-3);
    let flags: Vec<_> = ball
        .iter()
        .filter(|g| proximality_check(g, 1e-9).biproximal)
        .take(80)
        .filter_map(|g| Some((eigen_frame3(g.mat(), g.inv_mat(), 1e-9).ok()?.1[0].clone(), attracting_flag_pair(g.mat(), g.inv_mat(), 1e-9).ok()?)))
        .collect();
    for i in 0..flags.len() {
        for j in i + 1..flags.len() {
            let (p, q) = (&flags[i].0, &flags[j].0);
            let sep = (0..3).map(|k| (p[k] - q[k]).abs()).fold(0.0, f64::max).min((0..3).map(|k| (p[k] + q[k]).abs()).fold(0.0, f64::max));
            if sep < 1e-3 {
                continue;
            }
            let (_, score) = is_opposite(&flags[i].1, &flags[j].1, 1e-6).unwrap();
            // tangency makes the score quadratic in the point separation
            assert!(score > 1e-3 * sep * sep, "{sep:e} {score:e}");
            assert!(flag_distance(&flags[i].1, &flags[j].1) > 1e-8);
        }
    }
}

#[test]
fn tangent_lines_match_the_second_flag_subspace() {
    let ball = enumerate_ball(&preset_reflection_deformation(3, 3, 4, 2.0).unwrap(), 8, DEDUPE_TOL).unwrap();
    let omega = boundary_from_orbit(&ball, 1e-8).unwrap();
    for g in ball.iter().filter(|g| g.word().len() <= 5).take(80) {
        let Ok((_, [vp, v0, _])) = eigen_frame3(g.mat(), g.inv_mat(), 1e-9) else { continue };
        let p = ProjPoint::new([vp[0], vp[1], vp[2]]).unwrap();
        let q = ProjPoint::new([v0[0], v0[1], v0[2]]).unwrap();
        let (line, _) = tangent_line_at(&omega, &p).unwrap();
        assert!(line.angle(&ProjLine::through(&p, &q).unwrap()) < 1e-3, "{:?}", g.word());
    }
}

#[test]
fn hilbert_translation_length_is_half_log_ratio() {
    let ball = enumerate_ball(&preset_reflection_deformation(3, 3, 4, 2.0).unwrap(), 7, DEDUPE_TOL).unwrap();
    let omega = boundary_from_orbit(&ball, 1e-8).unwrap();
    let mut checked = 0;
    for g in ball.iter().filter(|g| proximality_check(g, 1e-9).biproximal).take(15) {
        let c = g.jordan().unwrap();
        let want = 0.5 * (c.coords()[0] - c.coords()[2]);
        let got = hilbert_translation_length(&omega, g, 1e-3, 200).unwrap();
        assert!((got - want).abs() < 1e-4, "{:?}: {got} vs {want}", g.word());
        checked += 1;
    }
    assert_eq!(checked, 15);
}
