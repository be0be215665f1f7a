//! The acceptance suite: twelve pass/fail criteria over a Fuchsian and a
//! deformed preset.

use std::f64::consts::PI;
use std::fs;

use anosov_core::boundary::{opposite_involution, BoundaryPoint, Flag};
use anosov_core::classify::radial_direction_probe;
use anosov_core::group::{
    displacement_minimum, enumerate_ball, finite_order, proximality_check, qi_constants, GroupElement, Presentation,
    QI_FLOOR,
};
use anosov_core::hilbert::hilbert_translation_length;
use anosov_core::matrix::{gram_schmidt_kan, CartanVector, Mat, SpdPoint};
use anosov_core::symspace::{busemann_iwasawa, busemann_oracle, distance, path_length};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::pipeline::{
    boundary_report, classify_chamber, cmd_enumerate, cone_of, interval_grid, load_ball, select_chambers, Ball,
    Context,
};
use crate::scenario::{noise_generators, PresetSpec, Scenario};
use crate::CliError;

pub const METRIC_SAMPLES: usize = 50;
pub const METRIC_STEPS: usize = 256;
pub const METRIC_TOL: f64 = 1e-6;
pub const BUSEMANN_SAMPLES: usize = 200;
pub const BUSEMANN_TOL: f64 = 1e-6;
/// Oracle stopping tolerance and starting ray parameter.
pub const BUSEMANN_ORACLE_TOL: f64 = 5e-7;
pub const BUSEMANN_ORACLE_START: f64 = 100.0;
/// Sampled directions keep this far from the chamber walls.
pub const BUSEMANN_WALL_MARGIN: f64 = 0.05;
pub const LIPSCHITZ_SLACK: f64 = 1e-7;
pub const JORDAN_POWER_TOL: f64 = 1e-7;
pub const JORDAN_INVERSE_TOL: f64 = 1e-9;
pub const AXIS_TOL: f64 = 1e-4;
pub const AXIS_ITER: usize = 2000;
pub const FUCHSIAN_CONE_WIDTH: f64 = 1e-3;
pub const CONIC_RESIDUAL_MAX: f64 = 1e-5;
pub const DEFORMED_CONE_WIDTH: f64 = 1e-2;
pub const GAP_FRACTION_MAX: f64 = 0.2;
pub const IOTA_MAX: f64 = 0.02;
pub const TANGENT_ANGLE_MAX: f64 = 1e-3;
pub const HILBERT_SAMPLES: usize = 30;
pub const HILBERT_TOL: f64 = 1e-4;
pub const HILBERT_SEARCH_TOL: f64 = 1e-3;
pub const HILBERT_BUDGET: usize = 200;
pub const PROBE_CHAMBERS: usize = 10;
pub const PROBE_STEP: f64 = 0.02;
pub const PROBE_FAR: f64 = 0.1;
pub const PROBE_FAR_GROWTH: f64 = 0.05;
pub const HORO_DEPTH: f64 = 5.0;
pub const TITS_MAX: f64 = PI / 3.0;
/// Radius of the near-identity control ball.
pub const NOISE_RADIUS: usize = 6;
pub const NOISE_AMPLITUDE: f64 = 1e-2;
pub const TORSION_MAX_ORDER: usize = 14;
pub const TORSION_TOL: f64 = 1e-8;

/// Identifiers and titles, in order.
pub const CRITERIA: [(u32, &str); 12] = [
    (1, "metric convention: Cartan distance matches geodesic integration"),
    (2, "Busemann closed form matches the ray limit and is 1-Lipschitz"),
    (3, "Jordan projection: homogeneity, opposition, translation length"),
    (4, "Fuchsian locus: biproximal, one-ray cone, conic boundary"),
    (5, "deformed locus: wide, gap-free, symmetric cone"),
    (6, "attracting flags of distinct fixed points are opposite"),
    (7, "boundary circle: injective flags, tangent consistency"),
    (8, "Hilbert translation length is half the extreme log ratio"),
    (9, "one radial cell per chamber, at the Jordan direction"),
    (10, "every cone direction is horospherical along powers"),
    (11, "orbit maps are quasi-isometric; near-identity control fails"),
    (12, "enumeration cache is byte-identical across runs"),
];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub fuchsian: String,
    pub deformed: String,
    pub radius: usize,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// One line per criterion.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{:>2} {mark} {}: {}\n", c.id, c.name, c.detail));
        }
        out.push_str(&format!("{} passed, {} failed\n", self.passed, self.failed));
        out
    }
}

/// The criteria list without running anything.
pub fn list() -> String {
    CRITERIA.iter().map(|(id, name)| format!("{id:>2} {name}\n")).collect()
}

type Outcome = Result<(bool, String), CliError>;

fn rng(seed: u64, criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(criterion))
}

/// Entries uniform in `[-spread, spread]`, rescaled to determinant 1.
pub fn random_unimodular(rng: &mut ChaCha8Rng, spread: f64) -> Mat {
    loop {
        let e: Vec<f64> = (0..9).map(|_| rng.random_range(-spread..spread)).collect();
        let mut m = Mat::from_row_slice(3, &e).expect("nine entries");
        let det = m.det();
        if det.abs() < 1e-3 {
            continue;
        }
        if det < 0.0 {
            for j in 0..3 {
                m.set(0, j, -m.get(0, j));
            }
        }
        return m.scale(det.abs().powf(-1.0 / 3.0));
    }
}

fn random_regular(rng: &mut ChaCha8Rng) -> anosov_core::Result<BoundaryPoint> {
    let k = gram_schmidt_kan(&random_unimodular(rng, 1.0))?.k;
    let m = PI / 6.0 - BUSEMANN_WALL_MARGIN;
    let theta = rng.random_range(-m..m);
    BoundaryPoint::regular(Flag::full(&k)?, &CartanVector::from_chamber_angle(theta)?)
}

fn random_point(rng: &mut ChaCha8Rng) -> anosov_core::Result<SpdPoint> {
    SpdPoint::from_factor(&random_unimodular(rng, 1.5))
}

fn metric_convention(seed: u64) -> Outcome {
    let mut rng = rng(seed, 1);
    let o = SpdPoint::basepoint(3);
    let mut worst = 0.0_f64;
    for _ in 0..METRIC_SAMPLES {
        let x = SpdPoint::from_factor(&random_unimodular(&mut rng, 1.5))?;
        worst = worst.max((distance(&o, &x)? - path_length(&o, &x, METRIC_STEPS)?).abs());
    }
    Ok((worst < METRIC_TOL, format!("max |d - path| = {worst:.3e} over {METRIC_SAMPLES}")))
}

fn busemann_crosscheck(seed: u64) -> Outcome {
    let mut rng = rng(seed, 2);
    let mut worst = 0.0_f64;
    let mut lip = f64::NEG_INFINITY;
    for _ in 0..BUSEMANN_SAMPLES {
        let xi = random_regular(&mut rng)?;
        let x = random_point(&mut rng)?;
        let closed = busemann_iwasawa(&xi, &x)?;
        let limit = busemann_oracle(&xi, &x, BUSEMANN_ORACLE_START, BUSEMANN_ORACLE_TOL)?;
        worst = worst.max((closed - limit.value).abs());
        let y = random_point(&mut rng)?;
        let db = (closed - busemann_iwasawa(&xi, &y)?).abs();
        lip = lip.max(db - distance(&x, &y)?);
    }
    Ok((
        worst < BUSEMANN_TOL && lip <= LIPSCHITZ_SLACK,
        format!("max |closed - limit| = {worst:.3e}; max |db| - d = {lip:.3e} over {BUSEMANN_SAMPLES}"),
    ))
}

fn jordan_laws(deformed: &Presentation, seed: u64) -> Outcome {
    let ball = enumerate_ball(deformed, 5, anosov_core::group::DEDUPE_TOL)?;
    let mut power = 0.0_f64;
    for g in ball.iter().filter(|g| g.jordan().is_ok_and(|j| j.norm() > 1e-3)).take(60) {
        let l = g.jordan()?;
        for n in [2, 3, 5] {
            let ln = g.pow(n).jordan()?;
            for (a, b) in ln.coords().iter().zip(l.coords()) {
                power = power.max((a - n as f64 * b).abs() / n as f64);
            }
        }
    }
    let mut rng = rng(seed, 3);
    let mut inverse = 0.0_f64;
    for _ in 0..60 {
        let g = GroupElement::from_matrix(random_unimodular(&mut rng, 2.0))?;
        let a = opposite_involution(&g.jordan()?);
        let b = g.inverse().jordan()?;
        for (x, y) in a.coords().iter().zip(b.coords()) {
            inverse = inverse.max((x - y).abs());
        }
    }
    let mut axis = 0.0_f64;
    for g in ball.iter().filter(|g| proximality_check(g, 1e-9).biproximal).take(12) {
        axis = axis.max((displacement_minimum(g, AXIS_ITER)? - g.translation_length()?).abs());
    }
    Ok((
        power < JORDAN_POWER_TOL && inverse < JORDAN_INVERSE_TOL && axis < AXIS_TOL,
        format!("power {power:.3e}/n, inverse {inverse:.3e}, axis {axis:.3e}"),
    ))
}

fn fuchsian_locus(ball: &Ball, ctx: &Context) -> Outcome {
    let bad = ball
        .elements
        .iter()
        .filter(|g| {
            !proximality_check(g, ctx.scenario.tol.proximal).positively_bi
                && finite_order(g, TORSION_MAX_ORDER, TORSION_TOL).is_none()
        })
        .count();
    let cone = cone_of(ball, ctx)?;
    let (lo, hi) = cone.interval;
    let (_, report) = boundary_report(ball, ctx)?;
    let pass = bad == 0
        && cone.width() < FUCHSIAN_CONE_WIDTH
        && lo.abs() < FUCHSIAN_CONE_WIDTH
        && hi.abs() < FUCHSIAN_CONE_WIDTH
        && report.conic_residual < CONIC_RESIDUAL_MAX;
    Ok((
        pass,
        format!(
            "{bad} of {} neither torsion nor positively biproximal; cone [{lo:.3e}, {hi:.3e}]; conic residual {:.3e}",
            ball.elements.len(),
            report.conic_residual
        ),
    ))
}

fn deformed_locus(ball: &Ball, ctx: &Context) -> Outcome {
    let cone = cone_of(ball, ctx)?;
    let (w, g) = (cone.width(), cone.max_gap());
    Ok((
        w > DEFORMED_CONE_WIDTH && g < GAP_FRACTION_MAX * w && cone.iota_asymmetry < IOTA_MAX,
        format!(
            "width {w:.4}, max gap {g:.4} ({:.3} of width), iota asymmetry {:.3e}",
            g / w,
            cone.iota_asymmetry
        ),
    ))
}

fn oppositeness(report: &crate::pipeline::BoundaryReport) -> Outcome {
    let s = &report.oppositeness;
    let worst = s
        .worst_pair
        .as_ref()
        .map(|(a, b, sep, score)| format!("; worst [{a}] vs [{b}] at separation {sep:.3e}, score {score:.3e}"))
        .unwrap_or_default();
    Ok((
        s.violations == 0 && s.opposite_pairs > 0,
        format!(
            "{} violations over {} pairs of {} flags, min score {:.3e}{worst}",
            s.violations, s.opposite_pairs, s.flag_count, s.min_score
        ),
    ))
}

fn circle_structure(report: &crate::pipeline::BoundaryReport) -> Outcome {
    let s = &report.oppositeness;
    Ok((
        s.injectivity_violations == 0 && report.tangent_max_angle < TANGENT_ANGLE_MAX && report.tangent_failures == 0,
        format!(
            "{} injectivity violations, min flag distance {:.3e}; tangent angle {:.3e}, {} tangent failures",
            s.injectivity_violations, s.min_flag_distance, report.tangent_max_angle, report.tangent_failures
        ),
    ))
}

fn hilbert_length(ball: &Ball, ctx: &Context) -> Outcome {
    let omega = anosov_core::hilbert::boundary_from_orbit(&ball.elements, ctx.scenario.tol.hull)?;
    let mut worst = 0.0_f64;
    let mut n = 0;
    for g in ball
        .elements
        .iter()
        .filter(|g| proximality_check(g, ctx.scenario.tol.proximal).biproximal)
        .take(HILBERT_SAMPLES)
    {
        let c = g.jordan()?;
        let want = 0.5 * (c.coords()[0] - c.coords()[2]);
        let got = hilbert_translation_length(&omega, g, HILBERT_SEARCH_TOL, HILBERT_BUDGET)?;
        worst = worst.max((got - want).abs());
        n += 1;
    }
    Ok((
        n == HILBERT_SAMPLES && worst < HILBERT_TOL,
        format!("max error {worst:.3e} over {n} elements"),
    ))
}

fn radial_uniqueness(balls: &[&Ball], ctx: &Context) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for ball in balls {
        let chambers = select_chambers(&ball.elements, PROBE_CHAMBERS, ctx.scenario.seed, ctx.scenario.tol.proximal);
        let mut bad = 0;
        let mut offset = 0.0_f64;
        for g in &chambers {
            let theta = g.jordan()?.chamber_angle()?;
            let r = radial_direction_probe(g, PROBE_STEP, ctx.scenario.classify.n_max)?;
            offset = offset.max((r.best_direction - theta).abs());
            let far_ok = r
                .profile
                .iter()
                .filter(|e| (e.angle - theta).abs() > PROBE_FAR)
                .all(|e| e.growth_rate > PROBE_FAR_GROWTH);
            if r.cells.len() != 1 || (r.best_direction - theta).abs() > PROBE_STEP || !far_ok {
                bad += 1;
            }
        }
        pass &= bad == 0 && chambers.len() == PROBE_CHAMBERS;
        lines.push(format!(
            "{}: {bad} of {} chambers fail, max offset {offset:.3e}",
            ball.presentation.kind().descriptor(),
            chambers.len()
        ));
    }
    Ok((pass, lines.join("; ")))
}

fn horosphericality(balls: &[&Ball], ctx: &Context) -> Outcome {
    let mut scenario = ctx.scenario.clone();
    scenario.classify.depth = HORO_DEPTH;
    let mut lines = Vec::new();
    let mut pass = true;
    for ball in balls {
        let cone = cone_of(ball, ctx)?;
        let dirs = interval_grid(cone.interval.0, cone.interval.1, PROBE_STEP);
        let chambers = select_chambers(&ball.elements, PROBE_CHAMBERS, ctx.scenario.seed, ctx.scenario.tol.proximal);
        let (mut total, mut horo, mut tits) = (0, 0, 0.0_f64);
        for g in &chambers {
            let (d, _) = classify_chamber(g, &dirs, &scenario)?;
            total += d.targets;
            horo += d.horospherical;
            tits = tits.max(d.max_tits_angle);
        }
        pass &= total > 0 && horo == total && tits <= TITS_MAX;
        lines.push(format!(
            "{}: {horo}/{total} horospherical over {} chambers x {} directions, max angle {tits:.3}",
            ball.presentation.kind().descriptor(),
            chambers.len(),
            dirs.len()
        ));
    }
    Ok((pass, lines.join("; ")))
}

fn qi_embedding(balls: &[&Ball], seed: u64) -> Outcome {
    let o = SpdPoint::basepoint(3);
    let mut lines = Vec::new();
    let mut pass = true;
    for ball in balls {
        let fit = qi_constants(&ball.elements, &o, QI_FLOOR)?;
        pass &= fit.verdict && fit.a_lower > 0.0;
        lines.push(format!("{}: A_lower {:.4}", ball.presentation.kind().descriptor(), fit.a_lower));
    }
    let noise = Presentation::custom(noise_generators(2, NOISE_AMPLITUDE, seed))?;
    let control = enumerate_ball(&noise, NOISE_RADIUS, anosov_core::group::DEDUPE_TOL)?;
    let fit = qi_constants(&control, &o, QI_FLOOR)?;
    pass &= fit.a_lower < QI_FLOOR && !fit.verdict;
    lines.push(format!("near-identity control: A_lower {:.4}", fit.a_lower));
    Ok((pass, lines.join("; ")))
}

fn determinism(ctx: &Context) -> Outcome {
    let mut texts = Vec::new();
    for run in ["a", "b"] {
        let dir = ctx.out_dir.join("determinism").join(run);
        let c = Context::new(ctx.scenario.clone(), dir.clone(), Some(dir.join("cache")));
        let out = cmd_enumerate(&c)?;
        texts.push(fs::read(&out.cache_path).map_err(|e| CliError::Io(e.to_string()))?);
    }
    Ok((
        texts[0] == texts[1],
        format!("two caches of {} bytes, identical: {}", texts[0].len(), texts[0] == texts[1]),
    ))
}

fn with_preset(scenario: &Scenario, preset: PresetSpec) -> Scenario {
    Scenario {
        preset,
        ..scenario.clone()
    }
}

/// The Fuchsian and deformed scenarios checked for `scenario`: a sym²
/// scenario fills the Fuchsian slot, any other preset the deformed one, and
/// the missing slot takes its default.
pub fn roles(scenario: &Scenario) -> (Scenario, Scenario) {
    let fuchsian = PresetSpec::Sym2Triangle { p: 2, q: 3, r: 7 };
    let deformed = PresetSpec::Reflection {
        p: 3,
        q: 3,
        r: 4,
        t: 2.0,
    };
    if crate::pipeline::is_fuchsian(&scenario.preset) {
        (scenario.clone(), with_preset(scenario, deformed))
    } else {
        (with_preset(scenario, fuchsian), scenario.clone())
    }
}

/// Runs every criterion; a criterion whose computation errors fails with the
/// error as its detail.
pub fn run(scenario: &Scenario, out_dir: &std::path::Path, cache_dir: Option<std::path::PathBuf>) -> VerifyReport {
    let (fs, ds) = roles(scenario);
    let fctx = Context::new(fs, out_dir.join("fuchsian"), cache_dir.clone());
    let dctx = Context::new(ds, out_dir.join("deformed"), cache_dir);
    let seed = scenario.seed;
    let fball = load_ball(&fctx);
    let dball = load_ball(&dctx);
    let dreport = dball.as_ref().map_err(Clone::clone).and_then(|b| boundary_report(b, &dctx).map(|r| r.1));
    let both = || -> Result<(&Ball, &Ball), CliError> {
        Ok((fball.as_ref().map_err(Clone::clone)?, dball.as_ref().map_err(Clone::clone)?))
    };
    let deformed_pres = dctx.scenario.preset.build(seed);
    let outcomes: Vec<Outcome> = vec![
        metric_convention(seed),
        busemann_crosscheck(seed),
        deformed_pres.map_err(CliError::from).and_then(|p| jordan_laws(&p, seed)),
        fball.as_ref().map_err(Clone::clone).and_then(|b| fuchsian_locus(b, &fctx)),
        dball.as_ref().map_err(Clone::clone).and_then(|b| deformed_locus(b, &dctx)),
        dreport.as_ref().map_err(Clone::clone).and_then(oppositeness),
        dreport.as_ref().map_err(Clone::clone).and_then(circle_structure),
        dball.as_ref().map_err(Clone::clone).and_then(|b| hilbert_length(b, &dctx)),
        both().and_then(|(f, d)| radial_uniqueness(&[f, d], &dctx)),
        both().and_then(|(f, d)| horosphericality(&[f, d], &dctx)),
        both().and_then(|(f, d)| qi_embedding(&[f, d], seed)),
        determinism(&dctx),
    ];
    let criteria: Vec<CriterionResult> = CRITERIA
        .iter()
        .zip(outcomes)
        .map(|(&(id, name), o)| {
            let (passed, detail) = o.unwrap_or_else(|e| (false, format!("error: {e}")));
            CriterionResult {
                id,
                name: name.into(),
                passed,
                detail,
            }
        })
        .collect();
    let passed = criteria.iter().filter(|c| c.passed).count();
    VerifyReport {
        fuchsian: fctx.scenario.preset.build(seed).map(|p| p.kind().descriptor()).unwrap_or_default(),
        deformed: dctx.scenario.preset.build(seed).map(|p| p.kind().descriptor()).unwrap_or_default(),
        radius: scenario.radius,
        passed,
        failed: criteria.len() - passed,
        criteria,
    }
}
