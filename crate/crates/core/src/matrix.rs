//! Small dense real matrices and the decompositions the geometry modules rely on.
//!
//! Everything here works in `f64`. Matrices are square; `Mat` wraps a heap
//! matrix so the same code handles every `d`, while the `d = 3` paths that
//! matter for the surface-group experiments get closed-form treatment
//! (characteristic cubic for spectra, paired forward/inverse evaluation for the
//! extreme singular values).
//!
//! Far-out orbit points have singular values spread over dozens of orders of
//! magnitude. The smallest ones cannot be read off a single SVD, so the
//! Cartan routines take a matrix together with its inverse and recover the
//! bottom of the spectrum as the reciprocal of the top of the inverse.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-9;
/// Default relative tolerance for iterative decompositions.
pub const ITERATIVE_TOL: f64 = 1e-8;

const SVD_MAX_SWEEPS: usize = 60;
const SCHUR_MAX_ITER: usize = 10_000;

/// A square real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat(DMatrix<f64>);

impl Mat {
    /// Builds a `d × d` matrix from row-major entries.
    pub fn from_row_slice(d: usize, entries: &[f64]) -> Result<Self> {
        if d == 0 || entries.len() != d * d {
            return Err(Error::DimMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(Mat(DMatrix::from_row_slice(d, d, entries)))
    }

    /// Builds a matrix from rows; panics on ragged input (test and preset helper).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        let flat: Vec<f64> = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), d, "ragged rows");
                r.iter().copied()
            })
            .collect();
        Mat(DMatrix::from_row_slice(d, d, &flat))
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let d = cols.len();
        Mat(DMatrix::from_fn(d, d, |i, j| cols[j][i]))
    }

    pub fn identity(d: usize) -> Self {
        Mat(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Mat(DMatrix::zeros(d, d))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let d = diag.len();
        Mat(DMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat(self.0.transpose())
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        Mat(&self.0 * &other.0)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat(&self.0 * s)
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        Mat(&self.0 - &other.0)
    }

    /// Frobenius norm, the norm of the inner product `Tr(Y Zᵗ)`.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// The inner product `Tr(Y Zᵗ)`.
    pub fn inner_product(&self, other: &Mat) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_finite() {
            return Err(Error::Singular);
        }
        self.0.clone().try_inverse().map(Mat).ok_or(Error::Singular)
    }

    pub fn asymmetry(&self) -> f64 {
        self.max_abs_diff(&self.transpose())
    }

    pub fn symmetrize(&self) -> Mat {
        Mat((&self.0 + self.0.transpose()) * 0.5)
    }

    /// `|det − 1|` against a tolerance scaled by `‖m‖^(d−1)`, the size of the adjugate.
    pub fn is_unimodular(&self, tol: f64) -> bool {
        let d = self.dim() as i32;
        let scale = self.norm().max(1.0).powi(d - 1);
        (self.det() - 1.0).abs() <= tol * scale
    }

    /// Normalizes the overall sign so the first entry of largest-order nonzero is positive.
    pub fn sign_normalized(&self) -> Mat {
        let first = self.0.iter().copied().find(|x| x.abs() > 1e-300);
        match first {
            Some(x) if x < 0.0 => self.scale(-1.0),
            _ => self.clone(),
        }
    }
}

/// One entry of a real spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit vector, first nonzero coordinate positive.
    pub vector: Vec<f64>,
}

/// Log-magnitudes of a matrix in the closed positive chamber: sorted
/// non-increasing, summing to zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CartanVector(Vec<f64>);

const CHAMBER_U0: [f64; 3] = [
    std::f64::consts::FRAC_1_SQRT_2,
    0.0,
    -std::f64::consts::FRAC_1_SQRT_2,
];

fn chamber_u1() -> [f64; 3] {
    let s = 6.0_f64.sqrt();
    [1.0 / s, -2.0 / s, 1.0 / s]
}

impl CartanVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let scale = coords.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if coords.is_empty() || coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotInChamber);
        }
        if coords.windows(2).any(|w| w[0] < w[1] - 1e-12 * scale) {
            return Err(Error::NotInChamber);
        }
        let sum: f64 = coords.iter().sum();
        if sum.abs() > 1e-9 * scale {
            return Err(Error::NotInChamber);
        }
        Ok(CartanVector(coords))
    }

    /// Sorts arbitrary log-magnitudes into the chamber and removes the trace.
    pub fn from_logs(mut logs: Vec<f64>) -> Self {
        logs.sort_by(|a, b| b.total_cmp(a));
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        for x in &mut logs {
            *x -= mean;
        }
        CartanVector(logs)
    }

    pub fn zero(d: usize) -> Self {
        CartanVector(vec![0.0; d])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &CartanVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> CartanVector {
        CartanVector(self.0.iter().map(|x| x * s).collect())
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn direction(&self) -> Option<CartanVector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    /// Angle inside the plane `Σa = 0` of `SL(3)`, measured from `(1,0,−1)/√2`
    /// toward `(1,−2,1)/√6`. The closed chamber maps onto `[−π/6, π/6]`.
    pub fn chamber_angle(&self) -> Result<f64> {
        if self.dim() != 3 {
            return Err(Error::DimMismatch {
                expected: 3,
                found: self.dim(),
            });
        }
        let u1 = chamber_u1();
        let x: f64 = self.0.iter().zip(CHAMBER_U0).map(|(a, b)| a * b).sum();
        let y: f64 = self.0.iter().zip(u1).map(|(a, b)| a * b).sum();
        Ok(y.atan2(x))
    }

    /// Unit `SL(3)` chamber vector at the given angle (see [`Self::chamber_angle`]).
    pub fn from_chamber_angle(theta: f64) -> Result<CartanVector> {
        if theta.abs() > PI / 6.0 + 1e-12 {
            return Err(Error::NotInChamber);
        }
        let (s, c) = theta.sin_cos();
        let u1 = chamber_u1();
        let v: Vec<f64> = (0..3).map(|i| c * CHAMBER_U0[i] + s * u1[i]).collect();
        // Clamp rounding at the walls.
        let mut v = v;
        if v[1] > v[0] {
            v[1] = v[0];
        }
        if v[2] > v[1] {
            v[2] = v[1];
        }
        Ok(CartanVector(v))
    }
}

/// A point of `SL(d,ℝ)/SO(d)`, the positive definite symmetric matrix
/// `factor · factorᵗ` of determinant 1.
///
/// The point is stored through a factor and its inverse. Any factor works
/// (they differ by a rotation on the right); keeping the pair lets distances
/// to far-away points stay accurate where the matrix itself would have lost
/// its small eigenvalues to rounding.
#[derive(Clone, Debug)]
pub struct SpdPoint {
    factor: Mat,
    factor_inv: Mat,
}

impl SpdPoint {
    /// The basepoint `o`, the identity matrix.
    pub fn basepoint(d: usize) -> Self {
        SpdPoint {
            factor: Mat::identity(d),
            factor_inv: Mat::identity(d),
        }
    }

    /// Validates a symmetric positive definite matrix of determinant 1.
    pub fn from_matrix(m: &Mat) -> Result<Self> {
        let scale = m.norm().max(f64::MIN_POSITIVE);
        if !m.is_finite() {
            return Err(Error::NotSpd("non-finite entries".into()));
        }
        if m.asymmetry() > 1e-12 * scale {
            return Err(Error::NotSpd(format!("asymmetry {:e}", m.asymmetry())));
        }
        let (vals, vecs) = sym_eigen(&m.symmetrize());
        if vals.iter().any(|&v| v <= 0.0) {
            return Err(Error::NotSpd("non-positive eigenvalue".into()));
        }
        let logdet: f64 = vals.iter().map(|v| v.ln()).sum();
        if (logdet.exp() - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::NotSpd(format!("det = {}", logdet.exp())));
        }
        let half: Vec<f64> = vals.iter().map(|v| v.sqrt()).collect();
        let half_inv: Vec<f64> = vals.iter().map(|v| 1.0 / v.sqrt()).collect();
        Ok(SpdPoint {
            factor: spectral_compose(&vecs, &half),
            factor_inv: spectral_compose(&vecs, &half_inv),
        })
    }

    /// The point `g·o = g gᵗ`; accepts `det g = ±1`.
    pub fn from_factor(g: &Mat) -> Result<Self> {
        if !(g.is_unimodular(ALGEBRAIC_TOL) || g.scale(-1.0).is_unimodular(ALGEBRAIC_TOL)) {
            return Err(Error::NotUnimodular(g.det()));
        }
        let inv = g.inverse()?;
        Ok(SpdPoint {
            factor: g.clone(),
            factor_inv: inv,
        })
    }

    /// The point `g·o` with a known inverse (no validation beyond shape).
    pub fn from_factor_pair(g: Mat, g_inv: Mat) -> Self {
        debug_assert_eq!(g.dim(), g_inv.dim());
        SpdPoint {
            factor: g,
            factor_inv: g_inv,
        }
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn factor(&self) -> &Mat {
        &self.factor
    }

    pub fn factor_inv(&self) -> &Mat {
        &self.factor_inv
    }

    /// The symmetric matrix `g gᵗ`.
    pub fn matrix(&self) -> Mat {
        self.factor.mul(&self.factor.transpose()).symmetrize()
    }

    /// The image `h·x` under the isometry `x ↦ h x hᵗ`.
    pub fn translate(&self, h: &Mat, h_inv: &Mat) -> SpdPoint {
        SpdPoint {
            factor: h.mul(&self.factor),
            factor_inv: self.factor_inv.mul(h_inv),
        }
    }
}

/// `V diag(vals) Vᵗ` for orthonormal columns `V`.
pub(crate) fn spectral_compose(vecs: &Mat, vals: &[f64]) -> Mat {
    let scaled = Mat(vecs.0.clone() * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(vals)));
    scaled.mul(&vecs.transpose())
}

/// Symmetric eigendecomposition with eigenvalues sorted non-increasing and
/// eigenvectors stored as columns in matching order.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = nalgebra::SymmetricEigen::new(m.0.clone());
    let d = m.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Mat(DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]));
    (vals, vecs)
}

/// Singular value decomposition `m = U diag(s) Vᵗ` with `s` sorted non-increasing.
///
/// One-sided Jacobi on whichever of `m`, `mᵗ` has the more uneven column
/// norms, so that graded matrices (row or column scaled over many orders of
/// magnitude) keep their singular values to high relative accuracy.
pub(crate) fn svd_sorted(m: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    if !m.is_finite() {
        return Err(Error::Singular);
    }
    let d = m.dim();
    let max = m.max_abs();
    if max == 0.0 {
        return Ok((Mat::identity(d), vec![0.0; d], Mat::identity(d)));
    }
    let scale = 2.0_f64.powi(max.log2().round() as i32);
    let spread = |norms: Vec<f64>| {
        let hi = norms.iter().copied().fold(0.0, f64::max);
        let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo.max(f64::MIN_POSITIVE)
    };
    let row_spread = spread((0..d).map(|i| m.row(i).iter().map(|x| x * x).sum::<f64>()).collect());
    let col_spread = spread((0..d).map(|j| m.column(j).iter().map(|x| x * x).sum::<f64>()).collect());
    let transposed = row_spread > col_spread;
    let a = if transposed { m.transpose() } else { m.clone() }.scale(1.0 / scale);
    let (u, s, v) = jacobi_svd(&a)?;
    let s: Vec<f64> = s.iter().map(|x| x * scale).collect();
    Ok(if transposed { (v, s, u) } else { (u, s, v) })
}

fn stable_norm(v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

/// Hestenes one-sided Jacobi: rotates column pairs of `a` until they are
/// mutually orthogonal, accumulating the rotations in `V`.
fn jacobi_svd(a: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    let d = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut converged = false;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                // work with norms and the cosine so that tiny columns
                // neither underflow nor lose precision when squared
                let (np, nq) = (stable_norm(&cols[p]), stable_norm(&cols[q]));
                if np == 0.0 || nq == 0.0 {
                    continue;
                }
                let cos = cols[p].iter().zip(&cols[q]).map(|(x, y)| (x / np) * (y / nq)).sum::<f64>();
                // rounding in the dot products is about d·ε relative
                if cos.abs() <= 2.0 * d as f64 * f64::EPSILON {
                    continue;
                }
                rotated = true;
                let r = nq / np;
                let zeta = (r - 1.0 / r) / (2.0 * cos);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + zeta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let sn = c * t;
                for vec in [&mut cols, &mut v] {
                    for i in 0..d {
                        let (x, y) = (vec[p][i], vec[q][i]);
                        vec[p][i] = c * x - sn * y;
                        vec[q][i] = sn * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalBreakdown("Jacobi SVD did not converge".into()));
    }
    let norms: Vec<f64> = cols.iter().map(|c| stable_norm(c)).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    // left vectors: normalized columns, completed by Gram–Schmidt where a
    // singular value vanishes
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(d);
    for &j in &order {
        let mut c = if norms[j] > 0.0 {
            cols[j].iter().map(|x| x / norms[j]).collect::<Vec<f64>>()
        } else {
            vec![0.0; d]
        };
        if norms[j] == 0.0 {
            for e in 0..d {
                let mut cand: Vec<f64> = (0..d).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
                for prev in &u {
                    let pr = dot(&cand, prev);
                    for i in 0..d {
                        cand[i] -= pr * prev[i];
                    }
                }
                let n = dot(&cand, &cand).sqrt();
                if n > 0.5 {
                    c = cand.iter().map(|x| x / n).collect();
                    break;
                }
            }
        }
        u.push(c);
    }
    let v_sorted: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok((Mat::from_columns(&u), s, Mat::from_columns(&v_sorted)))
}

fn top_singular(m: &Mat) -> Result<(f64, Vec<f64>)> {
    let (u, s, _) = svd_sorted(m)?;
    Ok((s[0], u.column(0)))
}

/// Roots of the monic cubic `x³ + a x² + b x + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let poly = |x: f64| ((x + a) * x + b) * x + c;
    let dpoly = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    let polish = |mut x: f64| {
        for _ in 0..3 {
            let f = poly(x);
            let df = dpoly(x);
            if df == 0.0 || !f.is_finite() {
                break;
            }
            let next = x - f / df;
            if poly(next).abs() < f.abs() {
                x = next;
            } else {
                break;
            }
        }
        x
    };
    if p == 0.0 && q == 0.0 {
        let r = Complex64::new(-shift, 0.0);
        return [r, r, r];
    }
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    if disc < 0.0 {
        let r = (-p / 3.0).sqrt();
        let phi = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0).acos();
        let mut roots = [0.0; 3];
        for (k, root) in roots.iter_mut().enumerate() {
            let y = 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos();
            *root = polish(y - shift);
        }
        return roots.map(|x| Complex64::new(x, 0.0));
    }
    let s = disc.sqrt();
    let w = -q / 2.0 - q.signum() * s;
    let u = w.cbrt();
    let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
    let x1 = polish(u + v - shift);
    // Deflate: the remaining pair has sum −a − x1 and product −c / x1.
    let sum = -a - x1;
    let prod = if x1 != 0.0 { -c / x1 } else { b + x1 * (a + x1) };
    let half = sum / 2.0;
    let d2 = half * half - prod;
    let (r2, r3) = if d2 >= 0.0 {
        let t = half + half.signum() * d2.sqrt();
        let t = if t == 0.0 { d2.sqrt() } else { t };
        let other = if t != 0.0 { prod / t } else { 0.0 };
        (Complex64::new(t, 0.0), Complex64::new(other, 0.0))
    } else {
        let im = (-d2).sqrt();
        (Complex64::new(half, im), Complex64::new(half, -im))
    };
    [Complex64::new(x1, 0.0), r2, r3]
}

fn sort_spectrum(vals: &mut [Complex64]) {
    vals.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
}

/// The full complex spectrum sorted by decreasing modulus, then decreasing real part.
///
/// `d = 3` uses the characteristic cubic in closed form; other sizes go
/// through a real Schur decomposition.
pub fn spectrum(m: &Mat) -> Result<Vec<Complex64>> {
    if !m.is_finite() {
        return Err(Error::Singular);
    }
    let d = m.dim();
    let mut vals: Vec<Complex64> = match d {
        1 => vec![Complex64::new(m.get(0, 0), 0.0)],
        2 => {
            let tr = m.trace();
            let det = m.det();
            let r = cubic_like_quadratic(tr, det);
            r.to_vec()
        }
        3 => {
            let g = |i, j| m.get(i, j);
            let c2 = m.trace();
            let c1 = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) + g(0, 0) * g(2, 2)
                - g(0, 2) * g(2, 0)
                + g(1, 1) * g(2, 2)
                - g(1, 2) * g(2, 1);
            let c0 = m.det();
            cubic_roots(-c2, c1, -c0).to_vec()
        }
        _ => m
            .0
            .clone()
            .try_schur(f64::EPSILON, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::NumericalBreakdown("Schur iteration did not converge".into()))?
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect(),
    };
    sort_spectrum(&mut vals);
    Ok(vals)
}

fn cubic_like_quadratic(tr: f64, det: f64) -> [Complex64; 2] {
    let half = tr / 2.0;
    let disc = half * half - det;
    if disc >= 0.0 {
        let t = half + if half >= 0.0 { 1.0 } else { -1.0 } * disc.sqrt();
        let other = if t != 0.0 { det / t } else { 0.0 };
        [Complex64::new(t, 0.0), Complex64::new(other, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(half, im), Complex64::new(half, -im)]
    }
}

/// Orthonormal vectors spanning the numerical kernel of `m − λI`, at least one.
fn kernel_vectors(m: &Mat, lambda: f64, max: usize) -> Result<Vec<Vec<f64>>> {
    let d = m.dim();
    let shifted = m.sub(&Mat::identity(d).scale(lambda));
    let (_, s, v) = svd_sorted(&shifted)?;
    let scale = m.norm().max(1.0);
    let mut out = Vec::new();
    for k in (0..d).rev() {
        if out.len() >= max {
            break;
        }
        if out.is_empty() || s[k] <= 1e-9 * scale {
            out.push(sign_normalized_vec(v.column(k)));
        }
    }
    Ok(out)
}

pub(crate) fn sign_normalized_vec(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-14) {
        if first < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
    }
    v
}

/// Relative size of eigenvalue-modulus gaps that cannot be told apart from
/// rounding: a repeated eigenvalue of a conditioned matrix splits by about
/// `√(ε·‖g‖‖g⁻¹‖)`.
pub fn spectral_noise(g: &Mat, g_inv: &Mat) -> f64 {
    1e2 * (f64::EPSILON * g.norm() * g_inv.norm()).sqrt()
}

/// Real eigenpairs: every eigenvalue whose imaginary part is at most `tol·‖m‖`,
/// sorted by decreasing modulus then decreasing value.
///
/// Repeated eigenvalues receive orthonormal kernel vectors; a defective
/// eigenvalue reuses its (smaller) eigenspace basis.
pub fn eig_real(m: &Mat, tol: f64) -> Result<Vec<EigenPair>> {
    if m.dim() == 0 || !m.is_finite() {
        return Err(Error::Singular);
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let spec = spectrum(m)?;
    let reals: Vec<f64> = spec
        .iter()
        .filter(|z| z.im.abs() <= tol * scale)
        .map(|z| z.re)
        .collect();
    let mut out = Vec::with_capacity(reals.len());
    let mut i = 0;
    while i < reals.len() {
        let mut j = i + 1;
        while j < reals.len() && (reals[j] - reals[i]).abs() <= 1e-9 * scale {
            j += 1;
        }
        let lambda = reals[i..j].iter().sum::<f64>() / (j - i) as f64;
        let vecs = kernel_vectors(m, lambda, j - i)?;
        for (k, value) in reals[i..j].iter().enumerate() {
            out.push(EigenPair {
                value: *value,
                vector: vecs[k % vecs.len()].clone(),
            });
        }
        i = j;
    }
    Ok(out)
}

/// Like [`eig_real`], but the whole spectrum is required to be real.
pub fn eig_real_all(m: &Mat, tol: f64) -> Result<Vec<EigenPair>> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if let Some(z) = spectrum(m)?.iter().find(|z| z.im.abs() > tol * scale) {
        return Err(Error::NonRealSpectrum { re: z.re, im: z.im });
    }
    eig_real(m, tol)
}

/// Unit eigenvector for the dominant eigenvalue, which must be real.
pub fn dominant_eigenvector(m: &Mat, tol: f64) -> Result<(f64, Vec<f64>)> {
    let spec = spectrum(m)?;
    let top = spec[0];
    if top.im.abs() > tol * m.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NonRealSpectrum {
            re: top.re,
            im: top.im,
        });
    }
    let v = kernel_vectors(m, top.re, 1)?.remove(0);
    Ok((top.re, v))
}

/// Result of [`svd_cartan`]: `m = k1 · diag(exp(a)) · k2`.
#[derive(Clone, Debug)]
pub struct CartanDecomposition {
    pub k1: Mat,
    pub a: CartanVector,
    pub k2: Mat,
}

/// Cartan decomposition of a unimodular matrix.
pub fn svd_cartan(m: &Mat) -> Result<CartanDecomposition> {
    if !m.is_finite() {
        return Err(Error::Singular);
    }
    if !m.is_unimodular(ALGEBRAIC_TOL) {
        return Err(Error::NotUnimodular(m.det()));
    }
    let (mut u, _, v) = svd_sorted(m)?;
    let mut vt = v.transpose();
    if u.det() < 0.0 {
        let d = m.dim();
        for r in 0..d {
            u.set(r, d - 1, -u.get(r, d - 1));
            vt.set(d - 1, r, -vt.get(d - 1, r));
        }
    }
    let inv = m.inverse()?;
    let a = cartan_pair(m, &inv)?;
    Ok(CartanDecomposition { k1: u, a, k2: vt })
}

/// Cartan projection (sorted log singular values) of `m`, reading the bottom
/// of the spectrum off the inverse so it stays accurate for badly conditioned input.
pub fn cartan_pair(m: &Mat, m_inv: &Mat) -> Result<CartanVector> {
    let d = m.dim();
    if m_inv.dim() != d {
        return Err(Error::DimMismatch {
            expected: d,
            found: m_inv.dim(),
        });
    }
    if d == 1 {
        return Ok(CartanVector::zero(1));
    }
    let (_, s, _) = svd_sorted(m)?;
    let top = s[0];
    let (top_inv, _) = top_singular(m_inv)?;
    if !(top > 0.0 && top_inv > 0.0) {
        return Err(Error::Singular);
    }
    let first = top.ln();
    let last = -top_inv.ln();
    let mut logs: Vec<f64> = match d {
        2 => {
            let a = 0.5 * (first - last);
            vec![a, -a]
        }
        3 => vec![first, -(first + last), last],
        _ => {
            let mut l: Vec<f64> = s.iter().map(|x| x.ln()).collect();
            l[0] = first;
            l[d - 1] = last;
            let excess: f64 = l.iter().sum::<f64>() / (d - 2) as f64;
            for x in &mut l[1..d - 1] {
                *x -= excess;
            }
            l
        }
    };
    logs.sort_by(|a, b| b.total_cmp(a));
    Ok(CartanVector(logs))
}

/// `log(n nᵗ)` as a symmetric matrix, accurate when `n` is badly conditioned.
pub fn log_gram_pair(n: &Mat, n_inv: &Mat) -> Result<Mat> {
    let d = n.dim();
    let a = cartan_pair(n, n_inv)?;
    let (u, s, _) = svd_sorted(n)?;
    let cond = s[0] / s[d - 1].max(f64::MIN_POSITIVE);
    let basis = if d == 3 && !(cond < 1e4) {
        let u1 = u.column(0);
        let (_, mut u3) = top_singular(&n_inv.transpose())?;
        let proj: f64 = u1.iter().zip(&u3).map(|(x, y)| x * y).sum();
        for (x, y) in u3.iter_mut().zip(&u1) {
            *x -= proj * y;
        }
        let u3 = sign_normalized_vec(u3);
        let u2 = cross(&u3, &u1);
        Mat::from_columns(&[u1, u2, u3])
    } else {
        u
    };
    let logs: Vec<f64> = a.coords().iter().map(|x| 2.0 * x).collect();
    Ok(spectral_compose(&basis, &logs).symmetrize())
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn check_symmetric_traceless(y: &Mat) -> Result<()> {
    let scale = y.norm().max(1.0);
    if y.asymmetry() > 1e-12 * scale {
        return Err(Error::NotSpd(format!("asymmetry {:e}", y.asymmetry())));
    }
    if y.trace().abs() > ALGEBRAIC_TOL * scale {
        return Err(Error::NotSpd(format!("trace {:e}", y.trace())));
    }
    Ok(())
}

/// Matrix exponential of a symmetric traceless matrix, as a point of `X`.
pub fn spd_exp(y: &Mat) -> Result<SpdPoint> {
    check_symmetric_traceless(y)?;
    let (vals, vecs) = sym_eigen(&y.symmetrize());
    let half: Vec<f64> = vals.iter().map(|v| (v / 2.0).exp()).collect();
    let half_inv: Vec<f64> = vals.iter().map(|v| (-v / 2.0).exp()).collect();
    Ok(SpdPoint::from_factor_pair(
        spectral_compose(&vecs, &half),
        spectral_compose(&vecs, &half_inv),
    ))
}

/// Matrix logarithm of a point of `X`; symmetric and traceless.
pub fn spd_log(p: &SpdPoint) -> Result<Mat> {
    log_gram_pair(p.factor(), p.factor_inv())
}

/// Exponential of a symmetric matrix, as a matrix.
pub fn sym_exp(y: &Mat) -> Mat {
    let (vals, vecs) = sym_eigen(&y.symmetrize());
    let e: Vec<f64> = vals.iter().map(|v| v.exp()).collect();
    spectral_compose(&vecs, &e)
}

/// Iwasawa factors `m = k · a · n`: orthogonal, positive diagonal, unit upper triangular.
#[derive(Clone, Debug)]
pub struct Kan {
    pub k: Mat,
    pub a: Mat,
    pub n: Mat,
}

/// Iwasawa factorization adapted to the standard flag, by modified
/// Gram–Schmidt with one reorthogonalization pass.
pub fn gram_schmidt_kan(m: &Mat) -> Result<Kan> {
    if !m.is_finite() {
        return Err(Error::Singular);
    }
    let d = m.dim();
    let scale = m.norm();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut r = Mat::zeros(d);
    for j in 0..d {
        let mut v = m.column(j);
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c: f64 = qi.iter().zip(&v).map(|(a, b)| a * b).sum();
                r.set(i, j, r.get(i, j) + c);
                for (x, y) in v.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-14 * scale) {
            return Err(Error::Singular);
        }
        r.set(j, j, norm);
        q.push(v.into_iter().map(|x| x / norm).collect());
    }
    let k = Mat::from_columns(&q);
    let diag: Vec<f64> = (0..d).map(|i| r.get(i, i)).collect();
    let a = Mat::from_diag(&diag);
    let mut n = Mat::zeros(d);
    for i in 0..d {
        for j in i..d {
            n.set(i, j, if i == j { 1.0 } else { r.get(i, j) / diag[i] });
        }
    }
    Ok(Kan { k, a, n })
}

/// Logarithm of the `A`-part of `z = n · a · k` (upper unipotent `n`),
/// evaluated from trailing minors so that it survives extreme conditioning.
pub(crate) fn nak_log_a(z: &Mat, z_inv: &Mat) -> Result<Vec<f64>> {
    let d = z.dim();
    if d == 3 {
        let row3: f64 = z.row(2).iter().map(|x| x * x).sum::<f64>().sqrt();
        let col1: f64 = z_inv.column(0).iter().map(|x| x * x).sum::<f64>().sqrt();
        let a3 = row3.ln();
        let a1 = -col1.ln();
        return Ok(vec![a1, -(a1 + a3), a3]);
    }
    // z⁻¹ = k⁻¹ a⁻¹ n⁻¹ is already in KAN form.
    let kan = gram_schmidt_kan(z_inv)?;
    Ok((0..d).map(|i| -kan.a.get(i, i).ln()).collect())
}
