//! Radial, horospherical and conical tests of boundary points against orbit sequences.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{eigen_frame3, BoundaryPoint, Flag};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::hilbert::{ConvexBody, ProjPoint};
use crate::matrix::{CartanVector, Mat, SpdPoint};
use crate::symspace::{busemann_iwasawa, busemann_oracle, dist_to_chamber, dist_to_ray, distance, Flat, GeodesicRay, WeylChamberSet};

/// Largest growth rate still read as bounded distance.
pub const RADIAL_GROWTH_MAX: f64 = 0.05;
/// Default horoball depth.
pub const DEFAULT_DEPTH: f64 = 5.0;
/// Default separation floor for the conical test.
pub const CONICAL_FLOOR: f64 = 1e-3;
/// Orbit displacement up to which power sequences are trusted.
pub const POWER_DIST_CAP: f64 = 16.0;
/// Fewest powers a probe runs on.
const MIN_POWERS: usize = 4;
/// Slack allowed in the monotone tail of a Busemann trace.
const MONOTONE_SLACK: f64 = 1e-6;

/// Orbit elements sorted by displacement of the base point.
#[derive(Clone, Debug)]
pub struct OrbitSequence {
    elements: Vec<GroupElement>,
    base: SpdPoint,
    distances: Vec<f64>,
    unbounded: bool,
}

impl OrbitSequence {
    pub fn new(elements: Vec<GroupElement>, base: SpdPoint) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InsufficientData("empty sequence".into()));
        }
        let mut keyed = elements
            .into_iter()
            .map(|g| {
                let x = base.translate(g.mat(), g.inv_mat());
                distance(&base, &x).map(|d| (d, g))
            })
            .collect::<Result<Vec<_>>>()?;
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let distances: Vec<f64> = keyed.iter().map(|k| k.0).collect();
        let first = distances[0];
        let last = distances[distances.len() - 1];
        let unbounded = if first > 0.0 { last / first >= 4.0 } else { false };
        Ok(OrbitSequence {
            elements: keyed.into_iter().map(|k| k.1).collect(),
            base,
            distances,
            unbounded,
        })
    }

    /// `g, g², …, g^n_max` at the basepoint.
    pub fn powers(g: &GroupElement, n_max: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(n_max);
        let mut acc = g.clone();
        for _ in 0..n_max {
            out.push(acc.clone());
            acc = acc.mul(g);
        }
        OrbitSequence::new(out, SpdPoint::basepoint(g.dim()))
    }

    /// The powers `gᵏ`, `k ≤ n_max`, that move the basepoint at most
    /// `dist_cap`; beyond roughly 12 the orbit points are too ill-conditioned
    /// for distances between them to keep more than a few digits.
    pub fn powers_within(g: &GroupElement, n_max: usize, dist_cap: f64) -> Result<Self> {
        Self::powers_from(g, SpdPoint::basepoint(g.dim()), n_max, dist_cap)
    }

    /// As [`OrbitSequence::powers_within`] with displacement measured from `o`.
    pub fn powers_from(g: &GroupElement, o: SpdPoint, n_max: usize, dist_cap: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(n_max);
        let mut acc = g.clone();
        for _ in 0..n_max {
            let x = o.translate(acc.mat(), acc.inv_mat());
            if distance(&o, &x)? > dist_cap {
                break;
            }
            out.push(acc.clone());
            acc = acc.mul(g);
        }
        if out.len() < MIN_POWERS {
            return Err(Error::InsufficientData(format!(
                "only {} powers within distance {dist_cap}",
                out.len()
            )));
        }
        OrbitSequence::new(out, o)
    }

    /// Greedy prefix chain through a word ball: starting from the empty word,
    /// repeatedly append the letter whose element moves the base point farthest.
    pub fn greedy_chain(ball: &[GroupElement], base: SpdPoint) -> Result<Self> {
        let index: HashMap<&[i32], usize> = ball.iter().enumerate().map(|(i, g)| (g.word(), i)).collect();
        let letters: Vec<i32> = {
            let mut l: Vec<i32> = ball.iter().filter(|g| g.word().len() == 1).map(|g| g.word()[0]).collect();
            l.sort_unstable();
            l
        };
        let mut word: Vec<i32> = Vec::new();
        let mut chain = Vec::new();
        loop {
            let mut best: Option<(f64, usize)> = None;
            for &l in &letters {
                if word.last() == Some(&-l) {
                    continue;
                }
                let mut w = word.clone();
                w.push(l);
                if let Some(&i) = index.get(w.as_slice()) {
                    let g = &ball[i];
                    let d = distance(&base, &base.translate(g.mat(), g.inv_mat()))?;
                    if best.is_none_or(|(bd, _)| d > bd) {
                        best = Some((d, i));
                    }
                }
            }
            let Some((_, i)) = best else { break };
            word = ball[i].word().to_vec();
            chain.push(ball[i].clone());
        }
        OrbitSequence::new(chain, base)
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn base(&self) -> &SpdPoint {
        &self.base
    }

    /// `d(base, γₖ·base)`, non-decreasing.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Whether the displacements grow by a factor of at least 4.
    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn points(&self) -> Vec<SpdPoint> {
        self.elements
            .iter()
            .map(|g| self.base.translate(g.mat(), g.inv_mat()))
            .collect()
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// The closed chamber at the base point spanned by the flag of `xi`.
fn chamber_of_target(xi: &BoundaryPoint, base: &SpdPoint) -> Result<WeylChamberSet> {
    // flat through o toward the pulled-back chamber, moved out to the base point
    let pulled = xi.act(base.factor_inv())?;
    let flat = Flat::through_flag(pulled.flag()).act(base.factor(), base.factor_inv());
    Ok(WeylChamberSet::standard(flat))
}

fn ray_of_target(xi: &BoundaryPoint, base: &SpdPoint) -> Result<GeodesicRay> {
    // pull ξ back to the basepoint, where the ray direction is `K diag(H) Kᵗ`
    let pulled = xi.act(base.factor_inv())?;
    GeodesicRay::new(base.clone(), pulled.matrix())
}

/// `(max dist to the chamber of ξ, slope of the distance to the ray toward ξ
/// against orbit displacement)`.
pub fn radial_score(seq: &OrbitSequence, xi: &BoundaryPoint, budget: usize) -> Result<(f64, f64)> {
    if !xi.is_regular() {
        return Err(Error::NotRegular(xi.flag().signature().to_vec()));
    }
    let pts = seq.points();
    let chamber = chamber_of_target(xi, seq.base())?;
    let sup = pts
        .par_iter()
        .map(|x| dist_to_chamber(x, &chamber, budget))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let growth = ray_growth(seq, &pts, xi)?;
    Ok((sup, growth))
}

fn ray_growth(seq: &OrbitSequence, pts: &[SpdPoint], xi: &BoundaryPoint) -> Result<f64> {
    let ray = ray_of_target(xi, seq.base())?;
    let dists = pts
        .par_iter()
        .map(|x| dist_to_ray(x, &ray).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(slope(seq.distances(), &dists))
}

fn busemann(xi: &BoundaryPoint, x: &SpdPoint) -> Result<f64> {
    if xi.is_regular() {
        busemann_iwasawa(xi, x)
    } else {
        busemann_oracle(xi, x, 100.0, 1e-8).map(|e| e.value)
    }
}

/// Busemann values along the sequence; horospherical when they end below
/// `−depth` with a (weakly) decreasing last quartile.
pub fn is_horospherical(seq: &OrbitSequence, xi: &BoundaryPoint, depth: f64) -> Result<(bool, Vec<f64>)> {
    if !(depth > 0.0) {
        return Err(Error::InsufficientData(format!("depth {depth} must be positive")));
    }
    let trace = seq
        .points()
        .par_iter()
        .map(|x| busemann(xi, x))
        .collect::<Result<Vec<_>>>()?;
    let n = trace.len();
    let tail = &trace[(3 * n / 4).min(n.saturating_sub(2))..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    let last = trace[n - 1];
    Ok((monotone && last < -depth, trace))
}

/// One grid direction of a radial probe.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProbeEntry {
    pub angle: f64,
    pub sup_dist: f64,
    pub growth_rate: f64,
    pub final_ray_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub best_direction: f64,
    pub profile: Vec<ProbeEntry>,
    /// Maximal runs `(first, last)` of grid indices passing the radial criterion.
    pub cells: Vec<(usize, usize)>,
}

/// Grid angles `−π/6 + (j + ½)·step` covering the chamber.
pub fn chamber_grid(step: f64) -> Vec<f64> {
    let width = std::f64::consts::PI / 3.0;
    let n = (width / step).ceil() as usize;
    let step = width / n as f64;
    (0..n).map(|j| -width / 2.0 + (j as f64 + 0.5) * step).collect()
}

/// The attracting flag of `g` and the point `F Fᵗ` for its unimodular
/// eigenframe `F = [v⁺ v⁰ v⁻]`.
///
/// The point lies on the flat of the eigenframe, so `gⁿ` moves it along that
/// flat and the radial direction is not masked by a bounded offset.
pub fn axis_base_point(g: &GroupElement) -> Result<(Flag, SpdPoint)> {
    let (_, [vp, v0, vm]) = eigen_frame3(g.mat(), g.inv_mat(), 1e-9)?;
    let frame = Mat::from_columns(&[vp, v0, vm]);
    let flag = Flag::full(&frame)?;
    let frame = frame.scale(frame.det().abs().powf(-1.0 / 3.0));
    Ok((flag, SpdPoint::from_factor(&frame)?))
}

/// Scans directions in the chamber of the attracting flag of `g`, scoring
/// `gⁿ` (`n ≤ n_max`, displacement at most [`POWER_DIST_CAP`]) against each.
pub fn radial_direction_probe(g: &GroupElement, grid_step: f64, n_max: usize) -> Result<ProbeResult> {
    if !(grid_step > 0.0 && grid_step <= 0.02 + 1e-12) {
        return Err(Error::InsufficientData(format!("grid step {grid_step} outside (0, 0.02]")));
    }
    let (flag, base) = axis_base_point(g)?;
    let seq = OrbitSequence::powers_from(g, base, n_max, POWER_DIST_CAP)?;
    let pts = seq.points();
    let ref_point = BoundaryPoint::regular(flag.clone(), &CartanVector::from_chamber_angle(0.0)?)?;
    let chamber = chamber_of_target(&ref_point, seq.base())?;
    let sup = pts
        .par_iter()
        .map(|x| dist_to_chamber(x, &chamber, crate::symspace::DEFAULT_BUDGET))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let grid = chamber_grid(grid_step);
    let profile = grid
        .par_iter()
        .map(|&theta| -> Result<ProbeEntry> {
            let xi = BoundaryPoint::regular(flag.clone(), &CartanVector::from_chamber_angle(theta)?)?;
            let ray = ray_of_target(&xi, seq.base())?;
            let dists = pts
                .iter()
                .map(|x| dist_to_ray(x, &ray).map(|r| r.0))
                .collect::<Result<Vec<_>>>()?;
            Ok(ProbeEntry {
                angle: theta,
                sup_dist: sup,
                growth_rate: slope(seq.distances(), &dists),
                final_ray_distance: dists[dists.len() - 1],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    let mut start: Option<usize> = None;
    for (j, e) in profile.iter().enumerate() {
        let pass = e.growth_rate < RADIAL_GROWTH_MAX;
        match (pass, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                cells.push((s, j - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        cells.push((s, profile.len() - 1));
    }
    let best = profile
        .iter()
        .min_by(|a, b| a.final_ray_distance.total_cmp(&b.final_ray_distance))
        .map(|e| e.angle)
        .unwrap_or(0.0);
    Ok(ProbeResult {
        best_direction: best,
        profile,
        cells,
    })
}

/// Minimum chart distance between `γ·x` and `γ·p` over the sequence and
/// `probe_count` boundary probes away from `p`.
pub fn conical_on_boundary(
    elements: &[GroupElement],
    p: &ProjPoint,
    omega: &ConvexBody,
    probe_count: usize,
    floor: f64,
) -> Result<(bool, f64)> {
    let scale = omega.scale().max(1e-300);
    let dist = omega.boundary_distance(p).map_err(|_| Error::NotOnBoundary(f64::INFINITY))?;
    if dist > 1e-8 * scale.max(1.0) {
        return Err(Error::NotOnBoundary(dist));
    }
    if probe_count < 8 {
        return Err(Error::InsufficientData(format!("{probe_count} probes, need 8")));
    }
    let chart = omega.chart();
    let pc = chart.coords(p.coords())?;
    let far: Vec<usize> = (0..omega.len())
        .filter(|&i| {
            let q = omega.chart_points()[i];
            (q[0] - pc[0]).hypot(q[1] - pc[1]) >= 0.05 * scale
        })
        .collect();
    if far.is_empty() {
        return Err(Error::InsufficientData("no probes away from p".into()));
    }
    let probes: Vec<&ProjPoint> = (0..probe_count.min(far.len()))
        .map(|k| &omega.vertices()[far[k * far.len() / probe_count.min(far.len())]])
        .collect();
    let mut min_sep = f64::INFINITY;
    for g in elements {
        let gp = chart.coords(p.act(g.mat())?.coords())?;
        for x in &probes {
            let gx = chart.coords(x.act(g.mat())?.coords())?;
            min_sep = min_sep.min((gx[0] - gp[0]).hypot(gx[1] - gp[1]));
        }
    }
    if elements.is_empty() {
        min_sep = floor;
    }
    Ok((min_sep >= floor, min_sep))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Verdicts {
    pub radial: bool,
    pub horospherical: bool,
}

/// One classified target.
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub target_flag: Vec<f64>,
    pub target_direction: Vec<f64>,
    /// `None` when the distance could not be bounded.
    pub radial_sup: Option<f64>,
    pub growth_rate: f64,
    pub busemann_trace: Vec<f64>,
    pub verdicts: Verdicts,
    pub config: serde_json::Value,
}

/// Radial and horospherical verdicts for one target.
pub fn classify(
    seq: &OrbitSequence,
    xi: &BoundaryPoint,
    depth: f64,
    budget: usize,
    config: serde_json::Value,
) -> Result<ClassificationReport> {
    let (sup, growth) = radial_score(seq, xi, budget)?;
    let (horo, trace) = is_horospherical(seq, xi, depth)?;
    let finite = sup.is_finite();
    Ok(ClassificationReport {
        target_flag: xi.flag().frame().row_major(),
        target_direction: xi.direction().to_vec(),
        radial_sup: finite.then_some(sup),
        growth_rate: growth,
        busemann_trace: trace,
        verdicts: Verdicts {
            radial: finite && growth < RADIAL_GROWTH_MAX && seq.is_unbounded(),
            horospherical: horo,
        },
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Flag;
    use crate::matrix::Mat;

    fn diag_g() -> GroupElement {
        GroupElement::from_matrix(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap()
    }

    fn target(theta: f64) -> BoundaryPoint {
        BoundaryPoint::regular(Flag::standard(3), &CartanVector::from_chamber_angle(theta).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_orbit_is_radial() {
        let seq = OrbitSequence::powers(&diag_g(), 12).unwrap();
        assert!(seq.is_unbounded());
        let (sup, growth) = radial_score(&seq, &target(0.0), 1000).unwrap();
        assert!(sup < 1e-6, "{sup}");
        assert!(growth.abs() < 1e-6);
        let (_, growth) = radial_score(&seq, &target(0.3), 1000).unwrap();
        assert!(growth >= 0.25, "{growth}");
    }

    #[test]
    fn horospherical_traces() {
        let g = diag_g();
        let seq = OrbitSequence::powers(&g, 12).unwrap();
        let (v, trace) = is_horospherical(&seq, &target(0.0), 5.0).unwrap();
        assert!(v);
        let norm = 2.0_f64.ln() * 2.0_f64.sqrt();
        for (k, b) in trace.iter().enumerate() {
            assert!((b + (k + 1) as f64 * norm).abs() < 1e-9);
        }
        let inv = OrbitSequence::powers(&g.inverse(), 12).unwrap();
        let (v, trace) = is_horospherical(&inv, &target(0.0), 5.0).unwrap();
        assert!(!v);
        assert!(trace.windows(2).all(|w| w[1] > w[0]));
        let id = OrbitSequence::new(vec![GroupElement::identity(3); 5], SpdPoint::basepoint(3)).unwrap();
        assert!(!is_horospherical(&id, &target(0.0), 5.0).unwrap().0);
    }

    #[test]
    fn probe_finds_axis() {
        let r = radial_direction_probe(&diag_g(), 0.02, 12).unwrap();
        assert!(r.best_direction.abs() <= 0.02);
        assert_eq!(r.cells.len(), 1);
    }

    #[test]
    fn probe_rejects_elliptic() {
        let (s, c) = 0.4_f64.sin_cos();
        let rot = Mat::from_rows(&[&[c, -s, 0.0], &[s, c, 0.0], &[0.0, 0.0, 1.0]]);
        let g = GroupElement::from_matrix(rot).unwrap();
        assert!(radial_direction_probe(&g, 0.02, 12).is_err());
    }

    #[test]
    fn grid_is_symmetric() {
        let g = chamber_grid(0.02);
        assert!((g[0] + g[g.len() - 1]).abs() < 1e-12);
        assert!(g[1] - g[0] <= 0.02 + 1e-12);
    }
}
