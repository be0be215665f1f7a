//! Convex domains in `ℝP²`, their Hilbert metric, and the boundary curve
//! traced out by attracting fixed points of a group.
//!
//! Everything is computed in an affine chart `{ℓ = 1}` chosen so that the
//! domain is bounded; the boundary is a convex polygon in that chart.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::boundary::eigen_frame3;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::matrix::{cross, sym_eigen, Mat};

type V3 = [f64; 3];
type P2 = [f64; 2];

fn dot3(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &V3, b: &V3) -> V3 {
    let c = cross(a, b);
    [c[0], c[1], c[2]]
}

fn normalize3(v: V3) -> Result<V3> {
    let n = dot3(&v, &v).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Singular);
    }
    let mut u = [v[0] / n, v[1] / n, v[2] / n];
    if let Some(&f) = u.iter().find(|x| x.abs() > 1e-300) {
        if f < 0.0 {
            u = [-u[0], -u[1], -u[2]];
        }
    }
    Ok(u)
}

fn apply(g: &Mat, v: &V3) -> V3 {
    let w = g.mul_vec(v);
    [w[0], w[1], w[2]]
}

fn sub2(a: &P2, b: &P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross2(a: &P2, b: &P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm2(a: &P2) -> f64 {
    a[0].hypot(a[1])
}

/// A point of `ℝP²`: unit representative, first nonzero coordinate positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint(V3);

impl ProjPoint {
    pub fn new(v: V3) -> Result<Self> {
        normalize3(v).map(ProjPoint)
    }

    pub fn coords(&self) -> &V3 {
        &self.0
    }

    pub fn act(&self, g: &Mat) -> Result<ProjPoint> {
        ProjPoint::new(apply(g, &self.0))
    }
}

/// A line of `ℝP²`, stored as its unit kernel functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjLine(V3);

impl ProjLine {
    pub fn new(coeffs: V3) -> Result<Self> {
        normalize3(coeffs).map(ProjLine)
    }

    /// The line through two distinct points.
    pub fn through(a: &ProjPoint, b: &ProjPoint) -> Result<Self> {
        ProjLine::new(cross3(&a.0, &b.0)).map_err(|_| Error::CoincidentPoints)
    }

    pub fn coeffs(&self) -> &V3 {
        &self.0
    }

    /// Angle between the two kernel functionals, in `[0, π/2]`.
    pub fn angle(&self, other: &ProjLine) -> f64 {
        dot3(&self.0, &other.0).abs().min(1.0).acos()
    }

    /// Value of the normalized functional on a unit point: the sine of its
    /// spherical distance to the line.
    pub fn offset(&self, p: &ProjPoint) -> f64 {
        dot3(&self.0, &p.0)
    }
}

/// An affine chart `{ℓ = 1}` with orthonormal in-plane frame `(e_a, e_b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chart {
    ell: V3,
    ea: V3,
    eb: V3,
}

impl Chart {
    pub fn new(ell: V3) -> Result<Self> {
        let n = dot3(&ell, &ell).sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidBody("zero chart functional".into()));
        }
        let ell = [ell[0] / n, ell[1] / n, ell[2] / n];
        let seed = if ell[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let c = dot3(&seed, &ell);
        let ea = normalize_plain([seed[0] - c * ell[0], seed[1] - c * ell[1], seed[2] - c * ell[2]]);
        let eb = cross3(&ell, &ea);
        Ok(Chart { ell, ea, eb })
    }

    /// The chart `{x₃ = 1}` with coordinates `(x₁/x₃, x₂/x₃)`.
    pub fn affine() -> Self {
        Chart {
            ell: [0.0, 0.0, 1.0],
            ea: [1.0, 0.0, 0.0],
            eb: [0.0, 1.0, 0.0],
        }
    }

    pub fn functional(&self) -> &V3 {
        &self.ell
    }

    /// Chart coordinates of a homogeneous vector.
    pub fn coords(&self, v: &V3) -> Result<P2> {
        let l = dot3(&self.ell, v);
        let n = dot3(v, v).sqrt();
        if !(l.abs() > 1e-12 * n) {
            return Err(Error::InvalidBody("point on the chart line".into()));
        }
        Ok([dot3(&self.ea, v) / l, dot3(&self.eb, v) / l])
    }

    /// Homogeneous vector of a chart point.
    pub fn lift(&self, p: &P2) -> V3 {
        [
            self.ell[0] + p[0] * self.ea[0] + p[1] * self.eb[0],
            self.ell[1] + p[0] * self.ea[1] + p[1] * self.eb[1],
            self.ell[2] + p[0] * self.ea[2] + p[1] * self.eb[2],
        ]
    }
}

fn normalize_plain(v: V3) -> V3 {
    let n = dot3(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Cross ratio `([a,y][b,x]) / ([a,x][b,y])` of four collinear points; equals
/// `(|ay|/|ax|)·(|bx|/|by|)` in any affine chart.
pub fn cross_ratio(a: &ProjPoint, x: &ProjPoint, y: &ProjPoint, b: &ProjPoint) -> Result<f64> {
    let (av, xv, yv, bv) = (a.0, x.0, y.0, b.0);
    let m1 = Mat::from_columns(&[av.to_vec(), xv.to_vec(), yv.to_vec()]).det();
    let m2 = Mat::from_columns(&[av.to_vec(), xv.to_vec(), bv.to_vec()]).det();
    let m3 = Mat::from_columns(&[av.to_vec(), yv.to_vec(), bv.to_vec()]).det();
    let defect = m1.abs().max(m2.abs()).max(m3.abs());
    if defect > 1e-9 {
        return Err(Error::NotCollinear(defect));
    }
    // Orthonormal basis of the plane carrying the line.
    let far = [&xv, &yv, &bv]
        .into_iter()
        .max_by(|p, q| {
            let cp = cross3(&av, p);
            let cq = cross3(&av, q);
            dot3(&cp, &cp).total_cmp(&dot3(&cq, &cq))
        })
        .expect("three candidates");
    let e = av;
    let c = dot3(far, &e);
    let f = [far[0] - c * e[0], far[1] - c * e[1], far[2] - c * e[2]];
    let fnorm = dot3(&f, &f).sqrt();
    if fnorm < 1e-14 {
        return Err(Error::CoincidentPoints);
    }
    let f = [f[0] / fnorm, f[1] / fnorm, f[2] / fnorm];
    let to2 = |p: &V3| [dot3(p, &e), dot3(p, &f)];
    let (a2, x2, y2, b2) = (to2(&av), to2(&xv), to2(&yv), to2(&bv));
    let br = |p: &P2, q: &P2| cross2(p, q);
    let den = br(&a2, &x2) * br(&b2, &y2);
    if den.abs() < 1e-28 {
        return Err(Error::CoincidentPoints);
    }
    Ok(br(&a2, &y2) * br(&b2, &x2) / den)
}

/// A properly convex domain, stored as a convex polygon (counter-clockwise) in a chart.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    chart: Chart,
    pts: Vec<P2>,
    vertices: Vec<ProjPoint>,
    /// Polar angles of the vertices about the centroid, with the rotation
    /// that makes them increasing.
    centroid: P2,
    angle_start: usize,
    angles: Vec<f64>,
}

impl ConvexBody {
    /// Validates a convex polygon given in chart coordinates.
    pub fn from_chart_points(chart: Chart, pts: Vec<P2>) -> Result<Self> {
        let n = pts.len();
        if n < 3 {
            return Err(Error::DegenerateHull(format!("{n} vertices")));
        }
        if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidBody("non-finite vertex".into()));
        }
        let area: f64 = (0..n).map(|i| cross2(&pts[i], &pts[(i + 1) % n])).sum::<f64>() / 2.0;
        let mut pts = pts;
        if area < 0.0 {
            pts.reverse();
        }
        let scale = pts.iter().fold(0.0_f64, |m, p| m.max(norm2(p))).max(1e-300);
        if area.abs() < 1e-18 * scale * scale {
            return Err(Error::DegenerateHull("zero area".into()));
        }
        for i in 0..n {
            let a = &pts[i];
            let b = &pts[(i + 1) % n];
            let c = &pts[(i + 2) % n];
            let turn = cross2(&sub2(b, a), &sub2(c, b));
            if turn < -1e-12 * scale * scale {
                return Err(Error::InvalidBody(format!("reflex vertex at {}", (i + 1) % n)));
            }
        }
        let mut vertices = Vec::with_capacity(n);
        for p in &pts {
            let v = chart.lift(p);
            if dot3(&chart.ell, &normalize_plain(v)).abs() < 1e-9 {
                return Err(Error::InvalidBody("vertex near the chart line".into()));
            }
            vertices.push(ProjPoint::new(v)?);
        }
        let centroid = [
            pts.iter().map(|p| p[0]).sum::<f64>() / n as f64,
            pts.iter().map(|p| p[1]).sum::<f64>() / n as f64,
        ];
        let raw: Vec<f64> = pts.iter().map(|p| (p[1] - centroid[1]).atan2(p[0] - centroid[0])).collect();
        let angle_start = (0..n).min_by(|&i, &j| raw[i].total_cmp(&raw[j])).unwrap_or(0);
        let angles = (0..n).map(|k| raw[(angle_start + k) % n]).collect();
        Ok(ConvexBody {
            chart,
            pts,
            vertices,
            centroid,
            angle_start,
            angles,
        })
    }

    /// Convex hull of projective points, in the first chart from a candidate
    /// list that keeps every input point on the hull boundary within `tol`.
    pub fn from_points(points: &[V3], tol: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateHull(format!("{} points", points.len())));
        }
        let mut last_err = Error::DegenerateHull("no admissible chart".into());
        for ell in chart_candidates(points) {
            let Ok(chart) = Chart::new(ell) else { continue };
            match hull_in_chart(chart, points, tol) {
                Ok(body) => return Ok(body),
                Err(e) => last_err = e,
            }
        }
        Err(last_err)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn vertices(&self) -> &[ProjPoint] {
        &self.vertices
    }

    pub fn chart_points(&self) -> &[P2] {
        &self.pts
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Largest distance of a vertex from the centroid.
    pub fn scale(&self) -> f64 {
        self.pts
            .iter()
            .map(|p| norm2(&sub2(p, &self.centroid)))
            .fold(0.0, f64::max)
    }

    /// The image `g·Ω`, recharted.
    pub fn transform(&self, g: &Mat) -> Result<ConvexBody> {
        let pts: Vec<V3> = self.vertices.iter().map(|v| apply(g, &v.0)).collect();
        ConvexBody::from_points(&pts, 1e-9 * self.pts.len() as f64)
    }

    fn edge(&self, i: usize) -> (P2, P2) {
        let n = self.pts.len();
        (self.pts[i % n], self.pts[(i + 1) % n])
    }

    /// Index of the edge whose angular wedge (about the centroid) contains `q`.
    fn wedge(&self, q: &P2) -> usize {
        let n = self.pts.len();
        let t = (q[1] - self.centroid[1]).atan2(q[0] - self.centroid[0]);
        let k = self.angles.partition_point(|a| *a <= t);
        (self.angle_start + k + n - 1) % n
    }

    /// Chart distance from `q` to the polygon boundary.
    pub fn boundary_distance_chart(&self, q: &P2) -> f64 {
        let n = self.pts.len();
        let w = self.wedge(q);
        let mut best = f64::INFINITY;
        for off in 0..5 {
            let (a, b) = self.edge(w + n + off - 2);
            best = best.min(segment_distance(q, &a, &b));
        }
        best
    }

    /// Chart distance from a projective point to the polygon boundary.
    pub fn boundary_distance(&self, p: &ProjPoint) -> Result<f64> {
        Ok(self.boundary_distance_chart(&self.chart.coords(&p.0)?))
    }

    /// Strict interior test with `1e−9` edge slack (relative to the polygon size).
    pub fn contains_chart(&self, q: &P2) -> bool {
        let slack = 1e-9 * self.scale();
        (0..self.pts.len()).all(|i| {
            let (a, b) = self.edge(i);
            let e = sub2(&b, &a);
            cross2(&e, &sub2(q, &a)) / norm2(&e) > slack
        })
    }

    pub fn contains(&self, p: &ProjPoint) -> bool {
        self.chart.coords(&p.0).is_ok_and(|q| self.contains_chart(&q))
    }

    /// Parameters `t_min < 0 < 1 < t_max` where the line `x + t(y − x)` leaves the polygon.
    fn chord(&self, x: &P2, y: &P2) -> Option<(f64, f64)> {
        let dir = sub2(y, x);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.pts.len() {
            let (a, b) = self.edge(i);
            let e = sub2(&b, &a);
            // inside: cross(e, p − a) ≥ 0
            let c0 = cross2(&e, &sub2(x, &a));
            let c1 = cross2(&e, &dir);
            if c1.abs() < 1e-300 {
                if c0 < 0.0 {
                    return None;
                }
                continue;
            }
            let t = -c0 / c1;
            if c1 > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        (lo.is_finite() && hi.is_finite() && lo < hi).then_some((lo, hi))
    }

    /// Smallest turn `|e_i × e_{i+1}| / (|e_i||e_{i+1}|)` over consecutive edges:
    /// positive when no three consecutive vertices are collinear.
    pub fn min_turn(&self) -> f64 {
        let n = self.pts.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                let (_, c) = self.edge(i + 1);
                let e1 = sub2(&b, &a);
                let e2 = sub2(&c, &b);
                cross2(&e1, &e2) / (norm2(&e1) * norm2(&e2))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(q: &P2, a: &P2, b: &P2) -> f64 {
    let e = sub2(b, a);
    let l2 = e[0] * e[0] + e[1] * e[1];
    let t = if l2 > 0.0 {
        (((q[0] - a[0]) * e[0] + (q[1] - a[1]) * e[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm2(&[q[0] - a[0] - t * e[0], q[1] - a[1] - t * e[1]])
}

/// Chart functionals to try: the mean of consistently oriented inputs, then
/// coordinate planes and a few fixed diagonals.
fn chart_candidates(points: &[V3]) -> Vec<V3> {
    let unit: Vec<V3> = points.iter().filter_map(|p| normalize3(*p).ok()).collect();
    let mut out = Vec::new();
    if let Some(first) = unit.first() {
        let mut ell = *first;
        for _ in 0..20 {
            let mut m = [0.0; 3];
            for v in &unit {
                let s = if dot3(v, &ell) >= 0.0 { 1.0 } else { -1.0 };
                for k in 0..3 {
                    m[k] += s * v[k];
                }
            }
            let n = dot3(&m, &m).sqrt();
            if n == 0.0 {
                break;
            }
            ell = [m[0] / n, m[1] / n, m[2] / n];
        }
        out.push(ell);
    }
    out.extend([
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
    ]);
    out
}

fn hull_in_chart(chart: Chart, points: &[V3], tol: f64) -> Result<ConvexBody> {
    let mut pts: Vec<P2> = Vec::with_capacity(points.len());
    for v in points {
        let u = normalize3(*v)?;
        if dot3(&chart.ell, &u).abs() < 1e-9 {
            return Err(Error::InvalidBody("point near the chart line".into()));
        }
        pts.push(chart.coords(v)?);
    }
    let hull = monotone_chain(&pts);
    if hull.len() < 3 {
        return Err(Error::DegenerateHull("collinear fixed points".into()));
    }
    let body = ConvexBody::from_chart_points(chart, hull)?;
    let scale = body.scale();
    let worst = pts
        .iter()
        .map(|p| body.boundary_distance_chart(p))
        .fold(0.0, f64::max);
    if worst > tol * scale.max(1.0) {
        return Err(Error::DegenerateHull(format!(
            "input point {worst:e} inside the hull in this chart"
        )));
    }
    Ok(body)
}

/// Counter-clockwise convex hull without collinear vertices.
fn monotone_chain(input: &[P2]) -> Vec<P2> {
    let mut pts: Vec<P2> = input.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(&sub2(&lower[lower.len() - 1], &lower[lower.len() - 2]), &sub2(p, &lower[lower.len() - 1])) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&sub2(&upper[upper.len() - 1], &upper[upper.len() - 2]), &sub2(p, &upper[upper.len() - 1])) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// `½·log CR(a, x, y, b)` with `a`, `b` where the line `xy` meets `∂Ω`.
pub fn hilbert_distance(omega: &ConvexBody, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    let xc = omega.chart.coords(&x.0).map_err(|_| Error::OutsideDomain)?;
    let yc = omega.chart.coords(&y.0).map_err(|_| Error::OutsideDomain)?;
    if !omega.contains_chart(&xc) || !omega.contains_chart(&yc) {
        return Err(Error::OutsideDomain);
    }
    hilbert_distance_chart(omega, &xc, &yc)
}

fn hilbert_distance_chart(omega: &ConvexBody, x: &P2, y: &P2) -> Result<f64> {
    if norm2(&sub2(x, y)) == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = omega.chord(x, y).ok_or(Error::OutsideDomain)?;
    if !(lo < 0.0 && hi > 1.0) {
        return Err(Error::OutsideDomain);
    }
    let cr = ((1.0 - lo) * hi) / ((-lo) * (hi - 1.0));
    Ok(0.5 * cr.ln())
}

/// Attracting fixed points of the biproximal elements, with the element index.
pub fn attracting_points(elements: &[GroupElement], tol: f64) -> Vec<(usize, V3)> {
    use rayon::prelude::*;
    elements
        .par_iter()
        .enumerate()
        .filter_map(|(i, g)| {
            if g.dim() != 3 {
                return None;
            }
            let (_, [vp, _, _]) = eigen_frame3(g.mat(), g.inv_mat(), tol).ok()?;
            Some((i, [vp[0], vp[1], vp[2]]))
        })
        .collect()
}

/// Number of short-word fixed points whose orbit images densify the hull.
const DENSIFY_SEEDS: usize = 64;
/// Seeds pushed toward each attracting fixed point by powers of its element.
const POWER_SEEDS: usize = 16;
/// Largest power used for that; powers stop once the image is within
/// `POWER_OFFSET_MIN` of the fixed point.
const DENSIFY_POWER: usize = 40;
const POWER_OFFSET_MIN: f64 = 1e-11;
/// The same cut-off when powers are applied directly, where rounding is larger.
const POWER_STEP_MIN: f64 = 1e-9;
/// Eigenframes better conditioned than this are used to place the powers.
const FRAME_CONDITION_MAX: f64 = 1e2;
/// Smallest ratio of the `v⁺` coefficient of a seed to its other coefficients.
const POWER_SEED_SEPARATION: f64 = 1e-2;
/// Eigenvalue log-gap below which an element is not read as biproximal when
/// collecting fixed points.
const FIXED_POINT_GAP: f64 = 1e-6;

/// `∂Ω` as the convex hull of attracting fixed points of group elements.
///
/// Besides `v⁺(g)` for every biproximal `g` in the input, the hull uses
/// `γ·v⁺(h)` (the fixed point of `γhγ⁻¹`) for the shortest biproximal `h`,
/// and `gᵏ·v⁺(h)` for `k ≤ 40`, which fills both sides of every `v⁺(g)`.
pub fn boundary_from_orbit(elements: &[GroupElement], tol: f64) -> Result<ConvexBody> {
    let fixed = attracting_points(elements, FIXED_POINT_GAP);
    if fixed.len() < 3 {
        return Err(Error::DegenerateHull(format!("{} biproximal elements", fixed.len())));
    }
    let mut seeds: Vec<(usize, V3)> = fixed.clone();
    seeds.sort_by_key(|(i, _)| (elements[*i].word().len(), *i));
    seeds.truncate(DENSIFY_SEEDS);
    let mut pts: Vec<V3> = fixed.iter().map(|(_, v)| *v).collect();
    for g in elements {
        for (_, v) in &seeds {
            pts.push(apply(g.mat(), v));
        }
    }
    for (i, _) in &fixed {
        let g = &elements[*i];
        let Ok((data, [vp, v0, vm])) = eigen_frame3(g.mat(), g.inv_mat(), FIXED_POINT_GAP) else { continue };
        let frame = Mat::from_columns(&[vp.clone(), v0.clone(), vm.clone()]);
        let Ok(frame_inv) = frame.inverse() else { continue };
        let well_conditioned = frame.norm() * frame_inv.norm() < FRAME_CONDITION_MAX;
        let [l1, l2, l3] = data.values;
        let (mu, nu) = (l2 / l1, l3 / l1);
        for (_, v) in seeds.iter().take(POWER_SEEDS) {
            let coef = frame_inv.mul_vec(v);
            let (a, b, c) = (coef[0], coef[1], coef[2]);
            if !(a.abs() > POWER_SEED_SEPARATION * (b.abs() + c.abs())) {
                continue;
            }
            if well_conditioned {
                // gᵏ·v = v⁺ + (b/a)μᵏ v₀ + (c/a)νᵏ v⁻ keeps offsets from v⁺
                // accurate far below rounding of v⁺ itself.
                let (mut sb, mut sc) = (b / a, c / a);
                for _ in 0..DENSIFY_POWER {
                    sb *= mu;
                    sc *= nu;
                    pts.push([
                        vp[0] + sb * v0[0] + sc * vm[0],
                        vp[1] + sb * v0[1] + sc * vm[1],
                        vp[2] + sb * v0[2] + sc * vm[2],
                    ]);
                    if sb.abs() + sc.abs() < POWER_OFFSET_MIN {
                        break;
                    }
                }
            } else {
                let mut w = normalize_plain(*v);
                for _ in 0..DENSIFY_POWER {
                    let next = normalize_plain(apply(g.mat(), &w));
                    let c = cross3(&next, &w);
                    w = next;
                    pts.push(w);
                    if dot3(&c, &c).sqrt() < POWER_STEP_MIN {
                        break;
                    }
                }
            }
        }
    }
    ConvexBody::from_points(&pts, tol)
}

/// Supporting line at a boundary point and the angle between the two
/// adjacent polygon edges there.
///
/// At a vertex the direction is the derivative of the quadratic through it
/// and its two neighbours, parametrized by chord length.
pub fn tangent_line_at(omega: &ConvexBody, p: &ProjPoint) -> Result<(ProjLine, f64)> {
    let q = omega.chart.coords(&p.0).map_err(|_| Error::NotOnBoundary(f64::INFINITY))?;
    let dist = omega.boundary_distance_chart(&q);
    if dist > 1e-8 * omega.scale().max(1.0) {
        return Err(Error::NotOnBoundary(dist));
    }
    let n = omega.pts.len();
    let w = omega.wedge(&q);
    // nearest vertex and nearest edge around the wedge
    let (mut best_v, mut dv) = (0, f64::INFINITY);
    let (mut best_e, mut de) = (0, f64::INFINITY);
    for off in 0..5 {
        let i = (w + n + off - 2) % n;
        let d = norm2(&sub2(&q, &omega.pts[i]));
        if d < dv {
            dv = d;
            best_v = i;
        }
        let (a, b) = omega.edge(i);
        let d = segment_distance(&q, &a, &b);
        if d < de {
            de = d;
            best_e = i;
        }
    }
    let vertex_tol = 1e-8 * omega.scale().max(1.0);
    let (anchor, dir, defect) = if dv <= vertex_tol {
        let prev = omega.pts[(best_v + n - 1) % n];
        let cur = omega.pts[best_v];
        let next = omega.pts[(best_v + 1) % n];
        let e1 = sub2(&cur, &prev);
        let e2 = sub2(&next, &cur);
        let (h1, h2) = (norm2(&e1), norm2(&e2));
        let w1 = h2 / (h1 + h2);
        let w2 = h1 / (h1 + h2);
        let dir = [w1 * e1[0] / h1 + w2 * e2[0] / h2, w1 * e1[1] / h1 + w2 * e2[1] / h2];
        let defect = cross2(&e1, &e2).atan2(e1[0] * e2[0] + e1[1] * e2[1]).abs();
        (cur, dir, defect)
    } else {
        let (a, b) = omega.edge(best_e);
        (q, sub2(&b, &a), 0.0)
    };
    let a3 = omega.chart.lift(&anchor);
    let b3 = omega.chart.lift(&[anchor[0] + dir[0], anchor[1] + dir[1]]);
    Ok((ProjLine::new(cross3(&a3, &b3))?, defect))
}

/// Hilbert translation length: the minimum of `d(x, g·x)` over the segment
/// joining the repelling and attracting fixed points of `g`.
pub fn hilbert_translation_length(omega: &ConvexBody, g: &GroupElement, tol: f64, budget: usize) -> Result<f64> {
    if g.mat().max_abs_diff(&Mat::identity(3)) <= 1e-12 {
        return Ok(0.0);
    }
    // Invariance check on up to 64 evenly spaced vertices.
    let n = omega.len();
    let step = n.div_ceil(64).max(1);
    let scale = omega.scale().max(1.0);
    for i in (0..n).step_by(step) {
        let image = apply(g.mat(), &omega.vertices[i].0);
        let q = omega.chart.coords(&image).map_err(|_| Error::NotPreserving(f64::INFINITY))?;
        let off = omega.boundary_distance_chart(&q);
        if off > tol * scale {
            return Err(Error::NotPreserving(off));
        }
    }
    let (_, [vp, _, vm]) = eigen_frame3(g.mat(), g.inv_mat(), 1e-9)?;
    let p = omega.chart.coords(&[vp[0], vp[1], vp[2]])?;
    let m = omega.chart.coords(&[vm[0], vm[1], vm[2]])?;
    let f = |s: f64| -> Result<f64> {
        let x = [m[0] + s * (p[0] - m[0]), m[1] + s * (p[1] - m[1])];
        let gx = omega.chart.coords(&apply(g.mat(), &omega.chart.lift(&x)))?;
        hilbert_distance_chart(omega, &x, &gx)
    };
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.05, 0.95);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..budget {
        if hi - lo < 1e-9 {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(fc.min(fd))
}

/// RMS Sampson distance of the vertices to their least-squares conic, in
/// units of the polygon size (centroid to farthest vertex).
pub fn conic_fit_residual(omega: &ConvexBody) -> Result<f64> {
    let n = omega.pts.len();
    if n < 6 {
        return Err(Error::InsufficientData(format!("{n} vertices, need 6")));
    }
    let c = omega.centroid;
    let s = omega.scale();
    let pts: Vec<P2> = omega.pts.iter().map(|p| [(p[0] - c[0]) / s, (p[1] - c[1]) / s]).collect();
    let mut ata = Mat::zeros(6);
    for p in &pts {
        let row = [p[0] * p[0], p[0] * p[1], p[1] * p[1], p[0], p[1], 1.0];
        for i in 0..6 {
            for j in 0..6 {
                ata.set(i, j, ata.get(i, j) + row[i] * row[j]);
            }
        }
    }
    let (_, vecs) = sym_eigen(&ata);
    let k = vecs.column(5);
    let (a, b, cc, d, e, f) = (k[0], k[1], k[2], k[3], k[4], k[5]);
    let sum: f64 = pts
        .iter()
        .map(|p| {
            let (x, y) = (p[0], p[1]);
            let q = a * x * x + b * x * y + cc * y * y + d * x + e * y + f;
            let gx = 2.0 * a * x + b * y + d;
            let gy = b * x + 2.0 * cc * y + e;
            let g2 = gx * gx + gy * gy;
            if g2 > 0.0 {
                q * q / g2
            } else {
                q * q
            }
        })
        .sum();
    Ok((sum / n as f64).sqrt())
}

/// `index,chart_x,chart_y,homog_1,homog_2,homog_3` rows.
pub fn boundary_csv(omega: &ConvexBody) -> String {
    let mut out = String::from("index,chart_x,chart_y,homog_1,homog_2,homog_3\n");
    for (i, (p, v)) in omega.pts.iter().zip(&omega.vertices).enumerate() {
        let h = v.coords();
        writeln!(
            out,
            "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p[0], p[1], h[0], h[1], h[2]
        )
        .expect("writing to a String");
    }
    out
}

/// A single-path SVG of the boundary polygon (y axis flipped).
pub fn boundary_svg(omega: &ConvexBody) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &omega.pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(-p[1]);
        y1 = y1.max(-p[1]);
    }
    let pad = 0.02 * (x1 - x0).max(y1 - y0);
    let mut d = String::new();
    for (i, p) in omega.pts.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        write!(d, "{cmd}{:.9} {:.9} ", p[0], -p[1]).expect("writing to a String");
    }
    d.push('Z');
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.9} {:.9} {:.9} {:.9}\">\n<path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.9}\"/>\n</svg>\n",
        x0 - pad,
        y0 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad,
        0.003 * (x1 - x0).max(y1 - y0)
    )
}

/// Regular `n`-gon inscribed in the unit circle of the affine chart.
pub fn regular_polygon(n: usize) -> Result<ConvexBody> {
    let pts = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    ConvexBody::from_chart_points(Chart::affine(), pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(x: f64, y: f64) -> ProjPoint {
        ProjPoint::new([x, y, 1.0]).unwrap()
    }

    #[test]
    fn cross_ratio_examples() {
        let (a, x, y, b) = (affine(-1.0, 0.0), affine(0.0, 0.0), affine(0.5, 0.0), affine(1.0, 0.0));
        assert!((cross_ratio(&a, &x, &y, &b).unwrap() - 3.0).abs() < 1e-12);
        assert!((cross_ratio(&a, &x, &x, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            cross_ratio(&a, &x, &affine(0.0, 1.0), &b),
            Err(Error::NotCollinear(_))
        ));
        assert!(matches!(cross_ratio(&a, &a, &y, &b), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn disk_distance() {
        let omega = regular_polygon(4096).unwrap();
        let d = hilbert_distance(&omega, &affine(0.0, 0.0), &affine(0.5, 0.0)).unwrap();
        assert!((d - 0.5 * 3.0_f64.ln()).abs() < 1e-4);
        assert_eq!(hilbert_distance(&omega, &affine(0.1, 0.2), &affine(0.1, 0.2)).unwrap(), 0.0);
        assert!(matches!(
            hilbert_distance(&omega, &affine(0.0, 0.0), &affine(2.0, 0.0)),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn polygon_tangent() {
        let omega = regular_polygon(4096).unwrap();
        let (line, defect) = tangent_line_at(&omega, &affine(1.0, 0.0)).unwrap();
        let expect = ProjLine::new([1.0, 0.0, -1.0]).unwrap();
        assert!(line.angle(&expect) < 1e-6);
        assert!((defect - 2.0 * PI / 4096.0).abs() < 1e-9);
        assert!(matches!(
            tangent_line_at(&omega, &affine(0.2, 0.0)),
            Err(Error::NotOnBoundary(_))
        ));
    }

    #[test]
    fn triangle_hull() {
        let pts = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [0.0, 0.0, 1.0]];
        // four points in general position are in convex position in some chart
        assert_eq!(ConvexBody::from_points(&pts, 1e-8).unwrap().len(), 4);
        let body = ConvexBody::from_points(&pts[..3], 1e-8).unwrap();
        assert_eq!(body.len(), 3);
        let collinear = [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [2.0, 0.0, 1.0]];
        assert!(matches!(
            ConvexBody::from_points(&collinear, 1e-8),
            Err(Error::DegenerateHull(_))
        ));
    }

    #[test]
    fn circle_is_a_conic() {
        let omega = regular_polygon(512).unwrap();
        assert!(conic_fit_residual(&omega).unwrap() < 1e-10);
        let square = ConvexBody::from_chart_points(
            Chart::affine(),
            (0..64)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 64.0;
                    let (s, c) = t.sin_cos();
                    let r = 1.0 / s.abs().max(c.abs());
                    [r * c, r * s]
                })
                .collect(),
        )
        .unwrap();
        assert!(conic_fit_residual(&square).unwrap() > 1e-3);
    }

    #[test]
    fn emitters() {
        let omega = regular_polygon(3).unwrap();
        let csv = boundary_csv(&omega);
        assert_eq!(csv.lines().count(), 4);
        let svg = boundary_svg(&omega);
        assert_eq!(svg.matches("<path").count(), 1);
    }
}
