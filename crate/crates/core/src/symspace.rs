//! Riemannian geometry of `X = SL(d,ℝ)/SO(d)`.
//!
//! Scale: the geodesic `s ↦ exp(sY)·o` with `Tr(Y²) = 1` has unit speed, so
//! `d(o, exp(a)·o) = ‖a‖` and the SPD matrix of that point is `exp(2sY)`.
//! Busemann functions decrease toward their boundary point.

use crate::boundary::{BoundaryPoint, Flag};
use crate::error::{Error, Result};
use crate::matrix::{self, cartan_pair, log_gram_pair, sym_eigen, CartanVector, Mat, SpdPoint};

/// Default iteration cap for the convex minimizations.
pub const DEFAULT_BUDGET: usize = 10_000;
/// Gradient-norm stopping threshold for the convex minimizations.
pub const GRADIENT_TOL: f64 = 1e-7;
/// Largest `t·(max H − min H)` the Busemann limit is pushed to before giving up.
const BUSEMANN_EXP_LIMIT: f64 = 640.0;

/// Riemannian distance.
pub fn distance(x: &SpdPoint, y: &SpdPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let m = x.factor_inv().mul(y.factor());
    let m_inv = y.factor_inv().mul(x.factor());
    Ok(cartan_pair(&m, &m_inv)?.norm())
}

fn check_unit_traceless(y: &Mat) -> Result<()> {
    if !y.is_finite() || y.asymmetry() > 1e-12 * y.norm().max(1.0) {
        return Err(Error::NotSymmetric(y.asymmetry()));
    }
    if y.trace().abs() > 1e-9 || (y.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnit(format!("trace {:e}, norm {}", y.trace(), y.norm())));
    }
    Ok(())
}

/// A unit-speed geodesic ray `s ↦ f·exp(sY)·o`, where `f` is the stored factor of the base.
#[derive(Clone, Debug)]
pub struct GeodesicRay {
    base: SpdPoint,
    direction: Mat,
    eig_vals: Vec<f64>,
    eig_vecs: Mat,
}

impl GeodesicRay {
    /// `direction` is read in the frame of the base's factor.
    pub fn new(base: SpdPoint, direction: Mat) -> Result<Self> {
        if base.dim() != direction.dim() {
            return Err(Error::DimMismatch {
                expected: base.dim(),
                found: direction.dim(),
            });
        }
        check_unit_traceless(&direction)?;
        let direction = direction.symmetrize();
        let (eig_vals, eig_vecs) = sym_eigen(&direction);
        Ok(GeodesicRay {
            base,
            direction,
            eig_vals,
            eig_vecs,
        })
    }

    /// The ray from the basepoint toward `xi`.
    pub fn toward(xi: &BoundaryPoint) -> Result<Self> {
        GeodesicRay::new(SpdPoint::basepoint(xi.dim()), xi.matrix())
    }

    pub fn base(&self) -> &SpdPoint {
        &self.base
    }

    pub fn direction(&self) -> &Mat {
        &self.direction
    }

    /// `exp(sY)` and its inverse.
    fn exp_pair(&self, s: f64) -> (Mat, Mat) {
        let e: Vec<f64> = self.eig_vals.iter().map(|v| (v * s).exp()).collect();
        let ei: Vec<f64> = self.eig_vals.iter().map(|v| (-v * s).exp()).collect();
        (
            matrix::spectral_compose(&self.eig_vecs, &e),
            matrix::spectral_compose(&self.eig_vecs, &ei),
        )
    }

    /// The ray restarted at parameter `s`.
    pub fn shifted(&self, s: f64) -> GeodesicRay {
        GeodesicRay {
            base: geodesic_point(self, s),
            ..self.clone()
        }
    }
}

/// `σ(s)` on the ray.
pub fn geodesic_point(r: &GeodesicRay, s: f64) -> SpdPoint {
    let (e, ei) = r.exp_pair(s);
    SpdPoint::from_factor_pair(r.base.factor().mul(&e), ei.mul(r.base.factor_inv()))
}

/// Length of the geodesic from `x` to `y` by quadrature of the metric
/// `‖V‖²_P = ¼ Tr(P⁻¹ V P⁻¹ V)` along `P(s) = x^½ (x^-½ y x^-½)^s x^½`, with
/// velocities from central differences. An oracle for the scale convention.
pub fn path_length(x: &SpdPoint, y: &SpdPoint, steps: usize) -> Result<f64> {
    let px = x.matrix();
    let (vx, qx) = sym_eigen(&px);
    let half: Vec<f64> = vx.iter().map(|v| v.sqrt()).collect();
    let half_inv: Vec<f64> = vx.iter().map(|v| 1.0 / v.sqrt()).collect();
    let xh = matrix::spectral_compose(&qx, &half);
    let xhi = matrix::spectral_compose(&qx, &half_inv);
    let inner = xhi.mul(&y.matrix()).mul(&xhi).symmetrize();
    let (vi, qi) = sym_eigen(&inner);
    if vi.iter().any(|v| *v <= 0.0) {
        return Err(Error::NotSpd("path endpoint".into()));
    }
    let logs: Vec<f64> = vi.iter().map(|v| v.ln()).collect();
    let path = |s: f64| {
        let p: Vec<f64> = logs.iter().map(|l| (l * s).exp()).collect();
        xh.mul(&matrix::spectral_compose(&qi, &p)).mul(&xh)
    };
    let h = 1e-4;
    let speed = |s: f64| -> Result<f64> {
        let p = path(s);
        let v = path(s + h).sub(&path(s - h)).scale(1.0 / (2.0 * h));
        let pinv = p.inverse()?;
        let w = pinv.mul(&v);
        Ok(0.5 * w.mul(&w).trace().max(0.0).sqrt())
    };
    let n = steps.max(2) & !1;
    let dt = 1.0 / n as f64;
    let mut total = speed(0.0)? + speed(1.0)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * speed(i as f64 * dt)?;
    }
    Ok(total * dt / 3.0)
}

/// One evaluation of a Busemann limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BusemannEstimate {
    /// Extrapolated limit.
    pub value: f64,
    /// `d(x, σ(t)) − t` at the largest parameter used.
    pub raw: f64,
    /// Difference of the last two secant slopes.
    pub estimate: f64,
    pub t: f64,
}

fn ray_distance(k: &Mat, h: &[f64], x: &SpdPoint, t: f64) -> Result<f64> {
    let d = h.len();
    // σ(t) = K exp(tH)·o; distance via exp(−tH) Kᵗ f_x and its inverse.
    let mut m = k.transpose().mul(x.factor());
    let mut m_inv = x.factor_inv().mul(k);
    for i in 0..d {
        let s = (-t * h[i]).exp();
        for j in 0..d {
            m.set(i, j, m.get(i, j) * s);
            m_inv.set(j, i, m_inv.get(j, i) / s);
        }
    }
    Ok(cartan_pair(&m, &m_inv)?.norm())
}

/// `b_ξ(x) = lim d(x, σ(t)) − t` evaluated directly along the ray from `o`.
///
/// `d(x, σ(t)) − t` approaches its limit only like `1/t`. Its square
/// `q(t) = d(x, σ(t))² − t²` tends to an affine function `2bt + c` with
/// exponentially small error, so the secant slopes `(q(2t) − q(t)) / 2t` over
/// `t = t₀, 2t₀, 4t₀, …` converge to `b` quickly. The iteration stops when two
/// successive slopes agree within `tol`, or fails once `t·(max H − min H)`
/// would underflow the row scaling.
pub fn busemann_oracle(xi: &BoundaryPoint, x: &SpdPoint, t_start: f64, tol: f64) -> Result<BusemannEstimate> {
    let k = xi.flag().frame();
    let h = xi.diagonal();
    let spread = h.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - h.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let mut t = t_start.max(1.0);
    if 4.0 * t * spread > BUSEMANN_EXP_LIMIT {
        t = 0.25 * BUSEMANN_EXP_LIMIT / spread;
    }
    let q = |t: f64| -> Result<(f64, f64)> {
        let d = ray_distance(&k, &h, x, t)?;
        Ok(((d - t) * (d + t), d - t))
    };
    let (mut q_prev, _) = q(t)?;
    let (mut q_next, _) = q(2.0 * t)?;
    let mut slope = (q_next - q_prev) / (2.0 * t);
    let mut estimate = f64::INFINITY;
    while 4.0 * t * spread <= BUSEMANN_EXP_LIMIT {
        t *= 2.0;
        q_prev = q_next;
        let raw;
        (q_next, raw) = q(2.0 * t)?;
        let next = (q_next - q_prev) / (2.0 * t);
        estimate = (next - slope).abs();
        slope = next;
        if estimate <= tol {
            return Ok(BusemannEstimate {
                value: slope,
                raw,
                estimate,
                t: 2.0 * t,
            });
        }
    }
    Err(Error::NoConvergence { estimate, tol })
}

/// Closed-form Busemann function for a regular target: with `Kᵗ f_x = n·a·k`
/// (upper unipotent `n`), `b_ξ(x) = −⟨H, log a⟩`.
pub fn busemann_iwasawa(xi: &BoundaryPoint, x: &SpdPoint) -> Result<f64> {
    if !xi.is_regular() {
        return Err(Error::NotRegular(xi.flag().signature().to_vec()));
    }
    let k = xi.flag().frame();
    let z = k.transpose().mul(x.factor());
    let z_inv = x.factor_inv().mul(&k);
    let log_a = matrix::nak_log_a(&z, &z_inv)?;
    Ok(-xi.diagonal().iter().zip(&log_a).map(|(h, a)| h * a).sum::<f64>())
}

/// A maximal flat `{ g₀·exp(diag a)·o : Σa = 0 }`.
#[derive(Clone, Debug)]
pub struct Flat {
    frame: Mat,
    frame_inv: Mat,
}

impl Flat {
    pub fn new(frame: &Mat) -> Result<Self> {
        if !frame.is_unimodular(matrix::ALGEBRAIC_TOL) {
            return Err(Error::NotUnimodular(frame.det()));
        }
        Ok(Flat {
            frame: frame.clone(),
            frame_inv: frame.inverse()?,
        })
    }

    /// The diagonal flat through the basepoint.
    pub fn standard(d: usize) -> Self {
        Flat {
            frame: Mat::identity(d),
            frame_inv: Mat::identity(d),
        }
    }

    /// The flat through `o` whose chambers at infinity include the flag.
    pub fn through_flag(flag: &Flag) -> Self {
        let mut k = flag.frame();
        if k.det() < 0.0 {
            let d = k.dim();
            for r in 0..d {
                k.set(r, d - 1, -k.get(r, d - 1));
            }
        }
        Flat {
            frame_inv: k.transpose(),
            frame: k,
        }
    }

    pub fn frame(&self) -> &Mat {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// The point with flat coordinates `a`.
    pub fn point(&self, a: &[f64]) -> SpdPoint {
        let d = self.dim();
        let mut f = self.frame.clone();
        let mut fi = self.frame_inv.clone();
        for j in 0..d {
            let s = a[j].exp();
            for i in 0..d {
                f.set(i, j, f.get(i, j) * s);
                fi.set(j, i, fi.get(j, i) / s);
            }
        }
        SpdPoint::from_factor_pair(f, fi)
    }

    /// The image `h·F`.
    pub fn act(&self, h: &Mat, h_inv: &Mat) -> Flat {
        Flat {
            frame: h.mul(&self.frame),
            frame_inv: self.frame_inv.mul(h_inv),
        }
    }
}

/// A closed Weyl chamber in a flat, apex at the flat's base point: the cone
/// `a[order[0]] ≥ a[order[1]] ≥ …`.
#[derive(Clone, Debug)]
pub struct WeylChamberSet {
    pub flat: Flat,
    order: Vec<usize>,
}

impl WeylChamberSet {
    pub fn new(flat: Flat, order: Vec<usize>) -> Result<Self> {
        let d = flat.dim();
        let mut seen = vec![false; d];
        if order.len() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: order.len(),
            });
        }
        for &i in &order {
            if i >= d || seen[i] {
                return Err(Error::InvalidFlag(format!("{order:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(WeylChamberSet { flat, order })
    }

    /// The chamber `a₁ ≥ … ≥ a_d`.
    pub fn standard(flat: Flat) -> Self {
        let d = flat.dim();
        WeylChamberSet {
            flat,
            order: (0..d).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Euclidean projection of flat coordinates onto the cone.
    pub fn project(&self, a: &[f64]) -> Vec<f64> {
        let permuted: Vec<f64> = self.order.iter().map(|&i| a[i]).collect();
        let fitted = isotonic_nonincreasing(&permuted);
        let mut out = vec![0.0; a.len()];
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = fitted[k];
        }
        out
    }
}

/// Least-squares non-increasing fit (pool adjacent violators); preserves the sum.
fn isotonic_nonincreasing(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            *blocks.last_mut().unwrap() = ((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, c)| std::iter::repeat_n(m, c))
        .collect()
}

/// `d(x, g₀ exp(a)·o)²` and its gradient in `a` (projected to `Σa = 0`).
struct FlatObjective {
    m: Mat,
    m_inv: Mat,
}

impl FlatObjective {
    fn new(x: &SpdPoint, flat: &Flat) -> Self {
        FlatObjective {
            m: flat.frame_inv.mul(x.factor()),
            m_inv: x.factor_inv().mul(&flat.frame),
        }
    }

    fn eval(&self, a: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = a.len();
        // N = exp(−a)·M, N⁻¹ = M⁻¹·exp(a)
        let mut n = self.m.clone();
        let mut n_inv = self.m_inv.clone();
        for i in 0..d {
            let s = (-a[i]).exp();
            for j in 0..d {
                n.set(i, j, n.get(i, j) * s);
                n_inv.set(j, i, n_inv.get(j, i) / s);
            }
        }
        let log = log_gram_pair(&n, &n_inv)?;
        let value = 0.25 * log.norm().powi(2);
        let mut grad: Vec<f64> = (0..d).map(|k| -log.get(k, k)).collect();
        let mean = grad.iter().sum::<f64>() / d as f64;
        for g in &mut grad {
            *g -= mean;
        }
        Ok((value, grad))
    }

    /// Flat coordinates of the row norms of `M`, a cheap starting guess.
    fn initial(&self) -> Vec<f64> {
        let d = self.m.dim();
        let mut a: Vec<f64> = (0..d)
            .map(|i| self.m.row(i).iter().map(|x| x * x).sum::<f64>().sqrt().ln())
            .collect();
        let mean = a.iter().sum::<f64>() / d as f64;
        for x in &mut a {
            *x -= mean;
        }
        a
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected gradient descent with Armijo backtracking on the flat objective.
fn minimize(
    obj: &FlatObjective,
    project: &dyn Fn(&[f64]) -> Vec<f64>,
    budget: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut a = project(&obj.initial());
    let (mut f, mut g) = obj.eval(&a)?;
    let stationarity = |a: &[f64], g: &[f64]| {
        let step: Vec<f64> = a.iter().zip(g).map(|(x, y)| x - y).collect();
        let p = project(&step);
        norm(&a.iter().zip(&p).map(|(x, y)| x - y).collect::<Vec<_>>())
    };
    let mut crit = stationarity(&a, &g);
    for _ in 0..budget {
        if crit <= GRADIENT_TOL {
            return Ok((f.max(0.0).sqrt(), a));
        }
        let mut eta = 0.5;
        loop {
            let trial: Vec<f64> = a.iter().zip(&g).map(|(x, y)| x - eta * y).collect();
            let trial = project(&trial);
            let (ft, gt) = obj.eval(&trial)?;
            let decrease: f64 = g.iter().zip(a.iter().zip(&trial)).map(|(gi, (x, y))| gi * (x - y)).sum();
            let ct = stationarity(&trial, &gt);
            // Near the optimum the decrease drops below rounding in f; accept
            // steps that shrink stationarity without increasing f beyond noise.
            let noise = 1e-13 * f.max(1.0);
            if ft <= f - 1e-4 * decrease || (ft <= f + noise && ct < crit) {
                a = trial;
                f = ft;
                g = gt;
                crit = ct;
                break;
            }
            eta *= 0.5;
            if eta < 1e-12 {
                if crit <= 1e-3 * GRADIENT_TOL.sqrt() {
                    return Ok((f.max(0.0).sqrt(), a));
                }
                return Err(Error::NumericalBreakdown(format!(
                    "line search stalled at stationarity {crit:e}"
                )));
            }
        }
    }
    if crit <= GRADIENT_TOL {
        return Ok((f.max(0.0).sqrt(), a));
    }
    Err(Error::BudgetExceeded(budget))
}

/// Distance from `x` to a flat, with the minimizing flat coordinates.
pub fn dist_to_flat(x: &SpdPoint, f: &Flat, budget: usize) -> Result<(f64, Vec<f64>)> {
    if x.dim() != f.dim() {
        return Err(Error::DimMismatch {
            expected: f.dim(),
            found: x.dim(),
        });
    }
    let obj = FlatObjective::new(x, f);
    minimize(&obj, &|a: &[f64]| a.to_vec(), budget)
}

/// Distance from `x` to a closed Weyl chamber.
pub fn dist_to_chamber(x: &SpdPoint, w: &WeylChamberSet, budget: usize) -> Result<f64> {
    dist_to_chamber_argmin(x, w, budget).map(|(d, _)| d)
}

/// [`dist_to_chamber`] with the minimizing flat coordinates.
pub fn dist_to_chamber_argmin(x: &SpdPoint, w: &WeylChamberSet, budget: usize) -> Result<(f64, Vec<f64>)> {
    if x.dim() != w.flat.dim() {
        return Err(Error::DimMismatch {
            expected: w.flat.dim(),
            found: x.dim(),
        });
    }
    let obj = FlatObjective::new(x, &w.flat);
    minimize(&obj, &|a: &[f64]| w.project(a), budget)
}

/// Distance from `x` to the image of a ray, by golden-section search on the
/// convex function `s ↦ d(x, σ(s))`.
pub fn dist_to_ray(x: &SpdPoint, r: &GeodesicRay) -> Result<(f64, f64)> {
    let f = |s: f64| distance(x, &geodesic_point(r, s));
    let upper = 2.0 * distance(x, r.base())? + 1.0;
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, upper);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while hi - lo > 1e-10 * upper.max(1.0) {
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
    let s = 0.5 * (lo + hi);
    let mut best = (f(s)?, s);
    for cand in [0.0, upper] {
        let v = f(cand)?;
        if v < best.0 {
            best = (v, cand);
        }
    }
    Ok(best)
}

/// Euclidean angle between two unit directions of one closed chamber.
pub fn angle_in_flat(h1: &CartanVector, h2: &CartanVector) -> Result<f64> {
    for h in [h1, h2] {
        if h.coords().windows(2).any(|w| w[0] < w[1] - 1e-12) {
            return Err(Error::NotInChamber);
        }
    }
    if h1.dim() != h2.dim() {
        return Err(Error::DimMismatch {
            expected: h1.dim(),
            found: h2.dim(),
        });
    }
    let c = h1.dot(h2) / (h1.norm() * h2.norm());
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Ratios `d(σ(tₙ), xₙ) / tₙ` with `tₙ = d(σ(0), xₙ)`, for a sequence that
/// should converge in direction to the endpoint of `r`.
pub fn deviation_ratios(points: &[SpdPoint], r: &GeodesicRay) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|x| {
            let t = distance(r.base(), x)?;
            if t == 0.0 {
                return Ok(0.0);
            }
            Ok(distance(&geodesic_point(r, t), x)? / t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{boundary_point_of, CLUSTER_EPS};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn diag_point(a: &[f64]) -> SpdPoint {
        Flat::standard(a.len()).point(a)
    }

    #[test]
    fn distance_examples() {
        let o = SpdPoint::basepoint(3);
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let g = SpdPoint::from_factor(&Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap();
        let expect = 2.0_f64.sqrt() * 2.0_f64.ln();
        assert!((distance(&o, &g).unwrap() - expect).abs() < 1e-14);
        assert!((path_length(&o, &g, 64).unwrap() - expect).abs() < 1e-7);
    }

    #[test]
    fn geodesic_unit_speed_and_flow() {
        let h1 = crate::boundary::BoundaryPoint::h1(3).unwrap();
        let r = GeodesicRay::toward(&h1).unwrap();
        let p = geodesic_point(&r, 1.0);
        assert!((distance(r.base(), &p).unwrap() - 1.0).abs() < 1e-12);
        let expect = matrix::sym_exp(&h1.matrix().scale(2.0));
        assert!(p.matrix().max_abs_diff(&expect) < 1e-12);
        let a = geodesic_point(&r, 2.5);
        let b = geodesic_point(&r.shifted(1.0), 1.5);
        assert!(distance(&a, &b).unwrap() < 1e-10);
        assert!(distance(&geodesic_point(&r, 0.0), r.base()).unwrap() < 1e-15);
    }

    fn regular_diag_point() -> BoundaryPoint {
        let n = (0.9_f64 * 0.9 + 0.1 * 0.1 + 1.0).sqrt();
        boundary_point_of(&Mat::from_diag(&[0.9 / n, 0.1 / n, -1.0 / n]), CLUSTER_EPS).unwrap()
    }

    #[test]
    fn busemann_examples() {
        let xi = regular_diag_point();
        let o = SpdPoint::basepoint(3);
        assert!(busemann_iwasawa(&xi, &o).unwrap().abs() < 1e-15);
        let b = busemann_oracle(&xi, &o, 100.0, 1e-8).unwrap();
        assert!(b.value.abs() < 1e-6);
        let r = GeodesicRay::toward(&xi).unwrap();
        let on_ray = geodesic_point(&r, 3.0);
        assert!((busemann_iwasawa(&xi, &on_ray).unwrap() + 3.0).abs() < 1e-12);
        assert!((busemann_oracle(&xi, &on_ray, 100.0, 1e-8).unwrap().value + 3.0).abs() < 1e-6);
        // x = exp(Y)·o, diagonal Y: b = −⟨H, Y⟩
        let y = [0.3, -0.5, 0.2];
        let x = diag_point(&y);
        let h = xi.diagonal();
        let expect = -h.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        assert!((busemann_iwasawa(&xi, &x).unwrap() - expect).abs() < 1e-12);
        assert!((busemann_oracle(&xi, &x, 100.0, 1e-8).unwrap().value - expect).abs() < 1e-6);
        assert!(matches!(
            busemann_iwasawa(&BoundaryPoint::h1(3).unwrap(), &o),
            Err(Error::NotRegular(_))
        ));
    }

    #[test]
    fn flat_examples() {
        let f = Flat::standard(3);
        let x = diag_point(&[0.4, 0.1, -0.5]);
        let (d, a) = dist_to_flat(&x, &f, DEFAULT_BUDGET).unwrap();
        assert!(d < 1e-8);
        assert!((a[0] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn chamber_examples() {
        let w = WeylChamberSet::standard(Flat::standard(3));
        let s = FRAC_1_SQRT_2;
        let inside = diag_point(&[s, 0.0, -s]);
        assert!(dist_to_chamber(&inside, &w, DEFAULT_BUDGET).unwrap() < 1e-8);
        // (−1,0,1)/√2 projects onto the apex of the chamber: the nearest
        // chamber point to the anti-dominant direction is o.
        let outside = diag_point(&[-s, 0.0, s]);
        let dc = dist_to_chamber(&outside, &w, DEFAULT_BUDGET).unwrap();
        assert!((dc - 1.0).abs() < 1e-7, "{dc}");
        let (df, _) = dist_to_flat(&outside, &w.flat, DEFAULT_BUDGET).unwrap();
        assert!(df <= dc + 1e-9);
    }

    #[test]
    fn isotonic_projection() {
        assert_eq!(isotonic_nonincreasing(&[1.0, 2.0, -3.0]), vec![1.5, 1.5, -3.0]);
        assert_eq!(isotonic_nonincreasing(&[3.0, 0.0, -3.0]), vec![3.0, 0.0, -3.0]);
        assert!(WeylChamberSet::new(Flat::standard(3), vec![0, 0, 1]).is_err());
    }

    #[test]
    fn angles() {
        let s = FRAC_1_SQRT_2;
        let a = CartanVector::new(vec![s, 0.0, -s]).unwrap();
        let s6 = 6.0_f64.sqrt();
        let b = CartanVector::new(vec![2.0 / s6, -1.0 / s6, -1.0 / s6]).unwrap();
        assert!(angle_in_flat(&a, &a).unwrap() < 1e-7);
        assert!((angle_in_flat(&a, &b).unwrap() - PI / 6.0).abs() < 1e-12);
        let c = CartanVector::new(vec![1.0 / s6, 1.0 / s6, -2.0 / s6]).unwrap();
        assert!((angle_in_flat(&b, &c).unwrap() - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ray_distance() {
        let xi = regular_diag_point();
        let r = GeodesicRay::toward(&xi).unwrap();
        let p = geodesic_point(&r, 2.0);
        let (d, s) = dist_to_ray(&p, &r).unwrap();
        assert!(d < 1e-6 && (s - 2.0).abs() < 1e-4);
    }
}
