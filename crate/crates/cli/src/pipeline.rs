//! The enumerate, limit-cone, boundary and classify pipelines.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anosov_core::boundary::{attracting_flag_pair, BoundaryPoint, Flag};
use anosov_core::classify::{
    axis_base_point, classify, radial_direction_probe, ClassificationReport, OrbitSequence, POWER_DIST_CAP,
};
use anosov_core::group::cache::{format_ball_cache, parse_ball_cache, BallCache};
use anosov_core::group::{enumerate_ball, limit_cone, proximality_check, ConeSummary, GroupElement, Presentation};
use anosov_core::hilbert::{
    attracting_points, boundary_csv, boundary_from_orbit, boundary_svg, conic_fit_residual, tangent_line_at,
    ConvexBody, ProjLine, ProjPoint,
};
use anosov_core::matrix::CartanVector;
use anosov_core::symspace::angle_in_flat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::scenario::{PresetSpec, Scenario};
use crate::CliError;

/// Fixed-point separation below which two attracting flags count as one.
pub const SAME_POINT: f64 = 1e-9;
/// Oppositeness is required of pairs at least this far apart.
pub const OPPOSITE_MIN_SEPARATION: f64 = 1e-3;
/// Injectivity is required of pairs at least this far apart.
pub const INJECTIVE_MIN_SEPARATION: f64 = 1e-6;
/// Smallest flag distance accepted between separated fixed points.
pub const INJECTIVE_MIN_FLAG_DISTANCE: f64 = 1e-8;
/// Number of boundary probes used for conical checks.
pub const CONICAL_PROBES: usize = 16;

/// Where a run reads and writes.
#[derive(Clone, Debug)]
pub struct Context {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Context {
    /// `cache_dir` defaults to `<out_dir>/cache`.
    pub fn new(scenario: Scenario, out_dir: impl Into<PathBuf>, cache_dir: Option<PathBuf>) -> Self {
        let out_dir = out_dir.into();
        let cache_dir = cache_dir.unwrap_or_else(|| out_dir.join("cache"));
        Context {
            scenario,
            out_dir,
            cache_dir,
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `sin` of the angle between two lines through the origin.
pub fn chordal_separation(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let n = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c = p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / (n(p) * n(q));
    (1.0 - c * c).max(0.0).sqrt()
}

/// An enumerated ball and its cache file.
#[derive(Clone, Debug)]
pub struct Ball {
    pub presentation: Presentation,
    pub elements: Vec<GroupElement>,
    pub cache_path: PathBuf,
}

/// File stem identifying preset, generators, radius and dedupe tolerance.
pub fn cache_key(pres: &Presentation, scenario: &Scenario) -> String {
    let desc = pres.kind().descriptor();
    let mut h = Sha256::new();
    h.update(desc.as_bytes());
    for g in pres.generators() {
        for x in g.row_major() {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    h.update(scenario.tol.dedupe.to_bits().to_le_bytes());
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    let stem: String = desc
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{stem}-r{}-{hex}.ball", scenario.radius)
}

fn elements_from_cache(cache: &BallCache) -> Result<Vec<GroupElement>, CliError> {
    cache
        .entries
        .iter()
        .map(|e| {
            let m = anosov_core::matrix::Mat::from_row_slice(cache.dim, &e.entries)?;
            let g = GroupElement::from_matrix(m)?;
            Ok(GroupElement::new(g.mat().clone(), g.inv_mat().clone(), e.word.clone()))
        })
        .collect()
}

fn enumerate_text(ctx: &Context) -> Result<(Presentation, String, PathBuf), CliError> {
    let s = &ctx.scenario;
    let pres = s.preset.build(s.seed)?;
    let elements = enumerate_ball(&pres, s.radius, s.tol.dedupe)?;
    let text = format_ball_cache(&pres.kind().descriptor(), s.radius, &elements)?;
    let path = ctx.cache_dir.join(cache_key(&pres, s));
    Ok((pres, text, path))
}

/// Outcome of [`cmd_enumerate`].
#[derive(Clone, Debug, Serialize)]
pub struct EnumerateOutcome {
    pub element_count: usize,
    pub cache_path: PathBuf,
}

/// Enumerates the ball and (re)writes its cache file.
pub fn cmd_enumerate(ctx: &Context) -> Result<EnumerateOutcome, CliError> {
    let (_, text, path) = enumerate_text(ctx)?;
    write_file(&path, &text)?;
    let cache = parse_ball_cache(&text)?;
    Ok(EnumerateOutcome {
        element_count: cache.entries.len(),
        cache_path: path,
    })
}

/// The ball from its cache file when present and matching, otherwise freshly
/// enumerated and cached. Elements always come from the cache text, so both
/// paths give identical downstream numbers.
pub fn load_ball(ctx: &Context) -> Result<Ball, CliError> {
    let s = &ctx.scenario;
    let pres = s.preset.build(s.seed)?;
    let path = ctx.cache_dir.join(cache_key(&pres, s));
    let cached = fs::read_to_string(&path)
        .ok()
        .and_then(|t| parse_ball_cache(&t).ok())
        .filter(|c| c.descriptor == pres.kind().descriptor() && c.radius == s.radius && c.dim == pres.dim());
    let cache = match cached {
        Some(c) => c,
        None => {
            let (_, text, path) = enumerate_text(ctx)?;
            write_file(&path, &text)?;
            parse_ball_cache(&text)?
        }
    };
    Ok(Ball {
        presentation: pres,
        elements: elements_from_cache(&cache)?,
        cache_path: path,
    })
}

/// Cone summary as written to `cone_summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct ConeDigest {
    pub interval: (f64, f64),
    pub width: f64,
    pub max_gap: f64,
    pub convexity_gaps: Vec<f64>,
    pub iota_asymmetry: f64,
    pub sample_count: usize,
}

impl From<&ConeSummary> for ConeDigest {
    fn from(c: &ConeSummary) -> Self {
        ConeDigest {
            interval: c.interval,
            width: c.width(),
            max_gap: c.max_gap(),
            convexity_gaps: c.convexity_gaps.clone(),
            iota_asymmetry: c.iota_asymmetry,
            sample_count: c.samples.len(),
        }
    }
}

fn word_text(w: &[i32]) -> String {
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

/// `angle,norm,word` rows sorted by angle.
pub fn cone_csv(cone: &ConeSummary) -> String {
    let mut rows: Vec<_> = cone.samples.iter().collect();
    rows.sort_by(|a, b| a.angle.total_cmp(&b.angle).then_with(|| a.word.cmp(&b.word)));
    let mut out = String::from("angle,norm,word\n");
    for s in rows {
        out.push_str(&format!("{},{},{}\n", fmt17(s.angle), fmt17(s.norm), word_text(&s.word)));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeOutcome {
    pub summary: ConeDigest,
    pub files: Vec<PathBuf>,
}

pub fn cone_of(ball: &Ball, ctx: &Context) -> Result<ConeSummary, CliError> {
    Ok(limit_cone(&ball.elements, ctx.scenario.tol.min_norm)?)
}

/// Writes `cone.csv` and `cone_summary.json`.
pub fn cmd_limit_cone(ctx: &Context) -> Result<ConeOutcome, CliError> {
    let ball = load_ball(ctx)?;
    let cone = cone_of(&ball, ctx)?;
    let summary = ConeDigest::from(&cone);
    let mut files = Vec::new();
    if ctx.scenario.outputs.cone {
        let csv = ctx.out("cone.csv");
        write_file(&csv, &cone_csv(&cone))?;
        let json = ctx.out("cone_summary.json");
        write_file(&json, &to_json(&summary))?;
        files = vec![csv, json];
    }
    Ok(ConeOutcome { summary, files })
}

/// A biproximal element with its attracting point and flag.
#[derive(Clone, Debug)]
pub struct FlagSample {
    pub word: Vec<i32>,
    pub point: [f64; 3],
    pub flag: Flag,
}

/// Attracting flags of the biproximal elements, one per fixed point.
pub fn attracting_flags(elements: &[GroupElement], tol: f64) -> Vec<FlagSample> {
    let mut out: Vec<FlagSample> = Vec::new();
    for (i, v) in attracting_points(elements, tol) {
        let g = &elements[i];
        let Ok(flag) = attracting_flag_pair(g.mat(), g.inv_mat(), tol) else { continue };
        if out.iter().any(|s| chordal_separation(&s.point, &v) < SAME_POINT) {
            continue;
        }
        out.push(FlagSample {
            word: g.word().to_vec(),
            point: v,
            flag,
        });
    }
    out
}

/// Pairwise transversality and injectivity over attracting flags.
#[derive(Clone, Debug, Serialize)]
pub struct PairStats {
    pub flag_count: usize,
    pub opposite_pairs: usize,
    pub min_score: f64,
    pub violations: usize,
    /// Words, separation and score of the least transverse pair.
    pub worst_pair: Option<(String, String, f64, f64)>,
    pub injective_pairs: usize,
    pub min_flag_distance: f64,
    pub injectivity_violations: usize,
}

pub fn pair_stats(flags: &[FlagSample], opposite_tol: f64) -> Result<PairStats, CliError> {
    use anosov_core::boundary::{flag_distance, is_opposite};
    struct Acc {
        opp: usize,
        min_score: f64,
        worst: Option<(usize, usize, f64)>,
        viol: usize,
        inj: usize,
        min_fd: f64,
        inj_viol: usize,
    }
    let rows = (0..flags.len())
        .into_par_iter()
        .map(|i| -> anosov_core::Result<Acc> {
            let mut a = Acc {
                opp: 0,
                min_score: f64::INFINITY,
                worst: None,
                viol: 0,
                inj: 0,
                min_fd: f64::INFINITY,
                inj_viol: 0,
            };
            for j in i + 1..flags.len() {
                let sep = chordal_separation(&flags[i].point, &flags[j].point);
                if sep >= OPPOSITE_MIN_SEPARATION {
                    let (ok, score) = is_opposite(&flags[i].flag, &flags[j].flag, opposite_tol)?;
                    a.opp += 1;
                    if !ok {
                        a.viol += 1;
                    }
                    if score < a.min_score {
                        a.min_score = score;
                        a.worst = Some((i, j, sep));
                    }
                }
                if sep >= INJECTIVE_MIN_SEPARATION {
                    let fd = flag_distance(&flags[i].flag, &flags[j].flag);
                    a.inj += 1;
                    a.min_fd = a.min_fd.min(fd);
                    if fd <= INJECTIVE_MIN_FLAG_DISTANCE {
                        a.inj_viol += 1;
                    }
                }
            }
            Ok(a)
        })
        .collect::<anosov_core::Result<Vec<_>>>()?;
    let mut stats = PairStats {
        flag_count: flags.len(),
        opposite_pairs: 0,
        min_score: f64::INFINITY,
        violations: 0,
        worst_pair: None,
        injective_pairs: 0,
        min_flag_distance: f64::INFINITY,
        injectivity_violations: 0,
    };
    for a in rows {
        stats.opposite_pairs += a.opp;
        stats.violations += a.viol;
        stats.injective_pairs += a.inj;
        stats.injectivity_violations += a.inj_viol;
        stats.min_flag_distance = stats.min_flag_distance.min(a.min_fd);
        if a.min_score < stats.min_score {
            stats.min_score = a.min_score;
            stats.worst_pair = a
                .worst
                .map(|(i, j, sep)| (word_text(&flags[i].word), word_text(&flags[j].word), sep, a.min_score));
        }
    }
    Ok(stats)
}

/// Largest angle between the tangent line of `omega` at each attracting
/// point and the second subspace of its flag, with the number of points where
/// no tangent could be formed.
pub fn tangent_consistency(omega: &ConvexBody, flags: &[FlagSample]) -> Result<(f64, usize), CliError> {
    let rows: Vec<Option<f64>> = flags
        .par_iter()
        .map(|s| -> anosov_core::Result<Option<f64>> {
            let p = ProjPoint::new(s.point)?;
            let c = s.flag.frame().column(1);
            let q = ProjPoint::new([c[0], c[1], c[2]])?;
            let Ok((line, _)) = tangent_line_at(omega, &p) else { return Ok(None) };
            Ok(Some(line.angle(&ProjLine::through(&p, &q)?)))
        })
        .collect::<anosov_core::Result<_>>()?;
    let worst = rows.iter().flatten().fold(0.0, |a: f64, &b| a.max(b));
    Ok((worst, rows.iter().filter(|r| r.is_none()).count()))
}

/// Written to `boundary_report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    pub vertex_count: usize,
    pub conic_residual: f64,
    pub tangent_max_angle: f64,
    pub tangent_failures: usize,
    pub oppositeness: PairStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryOutcome {
    pub report: BoundaryReport,
    pub files: Vec<PathBuf>,
}

pub fn boundary_report(ball: &Ball, ctx: &Context) -> Result<(ConvexBody, BoundaryReport), CliError> {
    if ball.presentation.dim() != 3 {
        return Err(anosov_core::Error::DimMismatch {
            expected: 3,
            found: ball.presentation.dim(),
        }
        .into());
    }
    let tol = &ctx.scenario.tol;
    let omega = boundary_from_orbit(&ball.elements, tol.hull)?;
    let flags = attracting_flags(&ball.elements, tol.proximal);
    let oppositeness = pair_stats(&flags, tol.opposite)?;
    let (tangent_max_angle, tangent_failures) = tangent_consistency(&omega, &flags)?;
    let report = BoundaryReport {
        vertex_count: omega.len(),
        conic_residual: conic_fit_residual(&omega)?,
        tangent_max_angle,
        tangent_failures,
        oppositeness,
    };
    Ok((omega, report))
}

/// Writes `boundary.csv`, `boundary.svg` and `boundary_report.json`.
pub fn cmd_boundary(ctx: &Context) -> Result<BoundaryOutcome, CliError> {
    let ball = load_ball(ctx)?;
    let (omega, report) = boundary_report(&ball, ctx)?;
    let mut files = Vec::new();
    let o = &ctx.scenario.outputs;
    if o.boundary {
        let p = ctx.out("boundary.csv");
        write_file(&p, &boundary_csv(&omega))?;
        files.push(p);
        let p = ctx.out("boundary_report.json");
        write_file(&p, &to_json(&report))?;
        files.push(p);
    }
    if o.svg {
        let p = ctx.out("boundary.svg");
        write_file(&p, &boundary_svg(&omega))?;
        files.push(p);
    }
    Ok(BoundaryOutcome { report, files })
}

/// Chambers to classify: biproximal elements of a ball whose powers fit at
/// least four steps under [`POWER_DIST_CAP`], spread over Jordan angles.
///
/// Candidates are shuffled by `seed`, bucketed by Jordan angle to 0.01 rad
/// and taken round-robin across buckets, one per attracting point.
pub fn select_chambers(elements: &[GroupElement], count: usize, seed: u64, tol: f64) -> Vec<GroupElement> {
    let mut cands: Vec<(i64, &GroupElement)> = elements
        .iter()
        .filter(|g| g.word().len() >= 2 && proximality_check(g, tol).positively_bi)
        .filter_map(|g| {
            let j = g.jordan().ok()?;
            (j.norm() * 4.0 <= POWER_DIST_CAP).then_some(((j.chamber_angle().ok()? / 0.01).round() as i64, g))
        })
        .collect();
    cands.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut keys: Vec<i64> = cands.iter().map(|c| c.0).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut buckets: Vec<Vec<&GroupElement>> = keys
        .iter()
        .map(|k| cands.iter().filter(|c| c.0 == *k).map(|c| c.1).rev().collect())
        .collect();
    let mut out: Vec<GroupElement> = Vec::new();
    let mut seen: Vec<[f64; 3]> = Vec::new();
    while out.len() < count && buckets.iter().any(|b| !b.is_empty()) {
        for b in buckets.iter_mut() {
            if out.len() >= count {
                break;
            }
            while let Some(g) = b.pop() {
                let Ok(flag) = attracting_flag_pair(g.mat(), g.inv_mat(), tol) else { continue };
                let c = flag.frame().column(0);
                let p = [c[0], c[1], c[2]];
                if seen.iter().any(|s| chordal_separation(s, &p) < SAME_POINT) {
                    continue;
                }
                if radial_direction_probe(g, 0.02, 12).is_err() {
                    continue;
                }
                seen.push(p);
                out.push(g.clone());
                break;
            }
        }
    }
    out
}

/// Directions spaced at most `step` apart covering `[lo, hi]`, endpoints included.
pub fn interval_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(0.0) as usize;
    if n == 0 {
        return vec![0.5 * (lo + hi)];
    }
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// One line of `classification.jsonl`.
#[derive(Clone, Debug, Serialize)]
pub struct TargetRecord {
    pub chamber: String,
    pub angle: f64,
    /// Angle in the flat between the target and the Jordan direction.
    pub tits_angle: f64,
    #[serde(flatten)]
    pub report: ClassificationReport,
}

/// Per-chamber summary.
#[derive(Clone, Debug, Serialize)]
pub struct ChamberDigest {
    pub chamber: String,
    pub jordan_angle: f64,
    pub best_direction: f64,
    pub radial_cells: usize,
    pub cells: Vec<(f64, f64)>,
    pub targets: usize,
    pub horospherical: usize,
    pub max_tits_angle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyOutcome {
    pub digests: Vec<ChamberDigest>,
    pub records: Vec<TargetRecord>,
    pub files: Vec<PathBuf>,
}

/// Classifies one chamber: the radial probe plus one target per direction.
pub fn classify_chamber(
    g: &GroupElement,
    directions: &[f64],
    scenario: &Scenario,
) -> Result<(ChamberDigest, Vec<TargetRecord>), CliError> {
    let c = &scenario.classify;
    let probe = radial_direction_probe(g, c.grid_step, c.n_max)?;
    let (flag, base) = axis_base_point(g)?;
    let seq = OrbitSequence::powers_from(g, base, c.n_max, POWER_DIST_CAP)?;
    let jordan = g.jordan()?;
    let config = serde_json::to_value(c).expect("settings serialize");
    let records = directions
        .iter()
        .map(|&theta| -> Result<TargetRecord, CliError> {
            let dir = CartanVector::from_chamber_angle(theta)?;
            let xi = BoundaryPoint::regular(flag.clone(), &dir)?;
            let report = classify(&seq, &xi, c.depth, c.budget, config.clone())?;
            Ok(TargetRecord {
                chamber: word_text(g.word()),
                angle: theta,
                tits_angle: angle_in_flat(&jordan, &dir)?,
                report,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let grid = |j: usize| probe.profile[j].angle;
    let digest = ChamberDigest {
        chamber: word_text(g.word()),
        jordan_angle: jordan.chamber_angle()?,
        best_direction: probe.best_direction,
        radial_cells: probe.cells.len(),
        cells: probe.cells.iter().map(|&(a, b)| (grid(a), grid(b))).collect(),
        targets: records.len(),
        horospherical: records.iter().filter(|r| r.report.verdicts.horospherical).count(),
        max_tits_angle: records.iter().map(|r| r.tits_angle).fold(0.0, f64::max),
    };
    Ok((digest, records))
}

/// Writes `classification.jsonl`, one object per (chamber, direction) target.
pub fn cmd_classify(ctx: &Context) -> Result<ClassifyOutcome, CliError> {
    let s = &ctx.scenario;
    let mut digests = Vec::new();
    let mut records = Vec::new();
    if s.classify.chambers > 0 {
        let ball = load_ball(ctx)?;
        let cone = cone_of(&ball, ctx)?;
        let directions = interval_grid(cone.interval.0, cone.interval.1, s.classify.grid_step);
        let chambers = select_chambers(&ball.elements, s.classify.chambers, s.seed, s.tol.proximal);
        let results = chambers
            .par_iter()
            .map(|g| classify_chamber(g, &directions, s))
            .collect::<Result<Vec<_>, _>>()?;
        for (d, r) in results {
            digests.push(d);
            records.extend(r);
        }
    }
    let mut files = Vec::new();
    if s.outputs.classification {
        let mut text = String::new();
        for r in &records {
            text.push_str(&serde_json::to_string(r).expect("records serialize"));
            text.push('\n');
        }
        let p = ctx.out("classification.jsonl");
        write_file(&p, &text)?;
        files.push(p);
    }
    Ok(ClassifyOutcome {
        digests,
        records,
        files,
    })
}

/// Written to `run_report.json` by every command.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub scenario: Scenario,
    pub element_count: Option<usize>,
    pub cone: Option<ConeDigest>,
    pub boundary: Option<BoundaryReport>,
    pub classification: Option<Vec<ChamberDigest>>,
    pub files: Vec<PathBuf>,
    pub seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, scenario: &Scenario) -> Self {
        RunReport {
            command: command.into(),
            scenario: scenario.clone(),
            element_count: None,
            cone: None,
            boundary: None,
            classification: None,
            files: Vec::new(),
            seconds: 0.0,
        }
    }

    /// Stamps the elapsed time and writes the report if requested.
    pub fn finish(mut self, ctx: &Context, start: Instant) -> Result<RunReport, CliError> {
        self.seconds = start.elapsed().as_secs_f64();
        if ctx.scenario.outputs.report {
            let p = ctx.out("run_report.json");
            self.files.push(p.clone());
            write_file(&p, &to_json(&self))?;
        }
        Ok(self)
    }
}

/// Whether a preset is the Fuchsian reference for verification.
pub fn is_fuchsian(p: &PresetSpec) -> bool {
    matches!(p, PresetSpec::Sym2Triangle { .. })
}
