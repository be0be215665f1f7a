//! Generator presets, word balls, Jordan and Cartan projections, limit cones,
//! and the quasi-isometry fit of orbit growth.

pub mod cache;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, cartan_pair, spectrum, CartanVector, Mat, SpdPoint};
use crate::symspace::distance;

/// Default matrix-identity tolerance for ball deduplication.
pub const DEDUPE_TOL: f64 = 1e-9;
/// Default translation-length filter for limit-cone samples.
pub const MIN_NORM: f64 = 0.2;
/// Default lower bound on the fitted slope for a positive QI verdict.
pub const QI_FLOOR: f64 = 0.05;
/// Default parameter window of the reflection preset.
pub const REFLECTION_WINDOW: (f64, f64) = (0.2, 5.0);

/// A group element: matrix, inverse, and the word that produced it.
#[derive(Debug)]
pub struct GroupElement {
    mat: Mat,
    inv: Mat,
    word: Vec<i32>,
    jordan: OnceLock<Result<CartanVector>>,
    cartan: OnceLock<Result<CartanVector>>,
}

impl Clone for GroupElement {
    fn clone(&self) -> Self {
        GroupElement {
            mat: self.mat.clone(),
            inv: self.inv.clone(),
            word: self.word.clone(),
            jordan: self.jordan.clone(),
            cartan: self.cartan.clone(),
        }
    }
}

/// Appends `b` to `a`, cancelling adjacent inverse letters.
pub fn reduce_concat(a: &[i32], b: &[i32]) -> Vec<i32> {
    let mut out = a.to_vec();
    for &l in b {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn is_freely_reduced(w: &[i32]) -> bool {
    w.iter().all(|&l| l != 0) && w.windows(2).all(|p| p[0] != -p[1])
}

impl GroupElement {
    pub fn new(mat: Mat, inv: Mat, word: Vec<i32>) -> Self {
        GroupElement {
            mat,
            inv,
            word,
            jordan: OnceLock::new(),
            cartan: OnceLock::new(),
        }
    }

    /// An element with no word, inverse computed.
    pub fn from_matrix(mat: Mat) -> Result<Self> {
        let inv = mat.inverse()?;
        Ok(GroupElement::new(mat, inv, Vec::new()))
    }

    pub fn identity(d: usize) -> Self {
        GroupElement::new(Mat::identity(d), Mat::identity(d), Vec::new())
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn inv_mat(&self) -> &Mat {
        &self.inv
    }

    pub fn word(&self) -> &[i32] {
        &self.word
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn inverse(&self) -> GroupElement {
        let word = self.word.iter().rev().map(|l| -l).collect();
        GroupElement::new(self.inv.clone(), self.mat.clone(), word)
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement::new(
            self.mat.mul(&other.mat),
            other.inv.mul(&self.inv),
            reduce_concat(&self.word, &other.word),
        )
    }

    /// `gⁿ` for `n ≥ 0`; negative `n` powers the inverse.
    pub fn pow(&self, n: i32) -> GroupElement {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = GroupElement::identity(self.dim());
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    /// The orbit point `g·o`.
    pub fn orbit_point(&self) -> SpdPoint {
        SpdPoint::from_factor_pair(self.mat.clone(), self.inv.clone())
    }

    /// Cached Jordan projection.
    pub fn jordan(&self) -> Result<CartanVector> {
        self.jordan.get_or_init(|| jordan_of(&self.mat, &self.inv)).clone()
    }

    /// Cached Cartan projection.
    pub fn cartan(&self) -> Result<CartanVector> {
        self.cartan.get_or_init(|| cartan_pair(&self.mat, &self.inv)).clone()
    }

    pub fn translation_length(&self) -> Result<f64> {
        Ok(self.jordan()?.norm())
    }
}

fn jordan_of(m: &Mat, inv: &Mat) -> Result<CartanVector> {
    let d = m.dim();
    if d == 3 {
        let top = spectrum(m)?[0].norm();
        let bottom = spectrum(inv)?[0].norm();
        if !(top > 0.0 && bottom > 0.0) {
            return Err(Error::NumericalBreakdown("zero spectral radius".into()));
        }
        let (a, c) = (top.ln(), bottom.ln());
        return Ok(CartanVector::from_logs(vec![a, c - a, -c]));
    }
    let logs: Vec<f64> = spectrum(m)?.iter().map(|z| z.norm().ln()).collect();
    if logs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalBreakdown("zero eigenvalue".into()));
    }
    Ok(CartanVector::from_logs(logs))
}

/// Jordan projection: sorted logarithms of eigenvalue moduli.
pub fn jordan_projection(g: &GroupElement) -> Result<CartanVector> {
    g.jordan()
}

/// Translation length `‖λ(g)‖`.
pub fn translation_length(g: &GroupElement) -> Result<f64> {
    g.translation_length()
}

/// Minimizes `d(x, g·x)` over all `x = exp(Y)·o` by gradient descent with
/// central-difference gradients. An independent check on the translation length.
pub fn displacement_minimum(g: &GroupElement, max_iter: usize) -> Result<f64> {
    let d = g.dim();
    // Orthonormal basis of symmetric traceless matrices.
    let mut basis: Vec<Mat> = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let mut e = Mat::zeros(d);
            e.set(i, j, std::f64::consts::FRAC_1_SQRT_2);
            e.set(j, i, std::f64::consts::FRAC_1_SQRT_2);
            basis.push(e);
        }
    }
    for k in 0..d - 1 {
        let mut e = Mat::zeros(d);
        let n = ((k + 1) * (k + 2)) as f64;
        for i in 0..=k {
            e.set(i, i, 1.0 / n.sqrt());
        }
        e.set(k + 1, k + 1, -((k + 1) as f64) / n.sqrt());
        basis.push(e);
    }
    let f = |c: &[f64]| -> Result<f64> {
        let mut y = Mat::zeros(d);
        for (ci, e) in c.iter().zip(&basis) {
            y = y.add(&e.scale(*ci));
        }
        let e = matrix::sym_exp(&y);
        let ei = matrix::sym_exp(&y.scale(-1.0));
        let m = ei.mul(&g.mat).mul(&e);
        let mi = ei.mul(&g.inv).mul(&e);
        Ok(cartan_pair(&m, &mi)?.norm())
    };
    let n = basis.len();
    let mut c = vec![0.0; n];
    let mut fc = f(&c)?;
    let h = 1e-6;
    for _ in 0..max_iter {
        let mut grad = vec![0.0; n];
        for k in 0..n {
            let mut cp = c.clone();
            let mut cm = c.clone();
            cp[k] += h;
            cm[k] -= h;
            grad[k] = (f(&cp)? - f(&cm)?) / (2.0 * h);
        }
        let gn = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-7 {
            break;
        }
        let mut eta = 1.0;
        let mut moved = false;
        while eta > 1e-10 {
            let trial: Vec<f64> = c.iter().zip(&grad).map(|(x, g)| x - eta * g).collect();
            let ft = f(&trial)?;
            if ft < fc - 1e-4 * eta * gn * gn {
                c = trial;
                fc = ft;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(fc)
}

/// Proximality report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Proximality {
    pub proximal: bool,
    pub biproximal: bool,
    /// Top eigenvalue real and positive.
    pub positively: bool,
    /// Top eigenvalues of both `g` and `g⁻¹` real and positive.
    pub positively_bi: bool,
    /// `|λᵢ|/|λᵢ₊₁| − 1`.
    pub gaps: Vec<f64>,
}

/// Spectral-gap report; never fails, so it can be used as a filter.
pub fn proximality_check(g: &GroupElement, tol: f64) -> Proximality {
    let fail = |d: usize| Proximality {
        proximal: false,
        biproximal: false,
        positively: false,
        positively_bi: false,
        gaps: vec![0.0; d.saturating_sub(1)],
    };
    let d = g.dim();
    let (Ok(spec), Ok(spec_inv), Ok(j)) = (spectrum(&g.mat), spectrum(&g.inv), g.jordan()) else {
        return fail(d);
    };
    let gaps: Vec<f64> = j.coords().windows(2).map(|w| (w[0] - w[1]).exp() - 1.0).collect();
    let top_real = |z: &num_complex::Complex64| z.im.abs() <= tol * z.norm();
    let floor = tol.max(crate::matrix::spectral_noise(&g.mat, &g.inv));
    let proximal = gaps.first().is_some_and(|&x| x > floor) && top_real(&spec[0]);
    let biproximal = proximal && gaps.last().is_some_and(|&x| x > floor) && top_real(&spec_inv[0]);
    let positively = proximal && spec[0].re > 0.0;
    let positively_bi = biproximal && positively && spec_inv[0].re > 0.0;
    Proximality {
        proximal,
        biproximal,
        positively,
        positively_bi,
        gaps,
    }
}

/// Smallest `k ≤ max_order` with `gᵏ = ±I` within `tol`, if any.
pub fn finite_order(g: &GroupElement, max_order: usize, tol: f64) -> Option<usize> {
    let d = g.dim();
    let id = Mat::identity(d);
    let mut acc = g.mat.clone();
    for k in 1..=max_order {
        let scale = acc.max_abs().max(1.0);
        if acc.max_abs_diff(&id) <= tol * scale || acc.scale(-1.0).max_abs_diff(&id) <= tol * scale {
            return Some(k);
        }
        acc = acc.mul(&g.mat);
    }
    None
}

/// The named families of generator sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PresetKind {
    FuchsianTriangle { p: u32, q: u32, r: u32 },
    Sym2Triangle { p: u32, q: u32, r: u32 },
    Reflection { p: u32, q: u32, r: u32, t: f64 },
    Single,
    Custom,
}

impl PresetKind {
    /// One-token description used in cache headers.
    pub fn descriptor(&self) -> String {
        match self {
            PresetKind::FuchsianTriangle { p, q, r } => format!("fuchsian-triangle({p},{q},{r})"),
            PresetKind::Sym2Triangle { p, q, r } => format!("sym2-triangle({p},{q},{r})"),
            PresetKind::Reflection { p, q, r, t } => format!("reflection({p},{q},{r};t={t})"),
            PresetKind::Single => "single".into(),
            PresetKind::Custom => "custom".into(),
        }
    }
}

/// A finite generating set.
#[derive(Clone, Debug)]
pub struct Presentation {
    generators: Vec<Mat>,
    inverses: Vec<Mat>,
    labels: Vec<String>,
    kind: PresetKind,
    /// Cartan matrix for reflection presets, row-major.
    cartan_datum: Option<Vec<Vec<f64>>>,
}

impl Presentation {
    pub fn new(generators: Vec<Mat>, labels: Vec<String>, kind: PresetKind) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InsufficientData("no generators".into()));
        }
        let d = generators[0].dim();
        let mut inverses = Vec::with_capacity(generators.len());
        for g in &generators {
            if g.dim() != d {
                return Err(Error::DimMismatch { expected: d, found: g.dim() });
            }
            if !g.is_finite() {
                return Err(Error::Singular);
            }
            if !g.is_unimodular(matrix::ALGEBRAIC_TOL) {
                return Err(Error::NotUnimodular(g.det()));
            }
            inverses.push(g.inverse()?);
        }
        let labels = if labels.len() == generators.len() {
            labels
        } else {
            (1..=generators.len()).map(|i| format!("g{i}")).collect()
        };
        Ok(Presentation {
            generators,
            inverses,
            labels,
            kind,
            cartan_datum: None,
        })
    }

    pub fn custom(generators: Vec<Mat>) -> Result<Self> {
        Presentation::new(generators, Vec::new(), PresetKind::Custom)
    }

    pub fn single(g: Mat) -> Result<Self> {
        Presentation::new(vec![g], vec!["a".into()], PresetKind::Single)
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> &PresetKind {
        &self.kind
    }

    pub fn cartan_datum(&self) -> Option<&Vec<Vec<f64>>> {
        self.cartan_datum.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// Matrix of a letter: `i` for generator `i`, `−i` for its inverse.
    pub fn letter(&self, l: i32) -> (&Mat, &Mat) {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            (&self.generators[i], &self.inverses[i])
        } else {
            (&self.inverses[i], &self.generators[i])
        }
    }

    /// Letters in shortlex order: `1, −1, 2, −2, …`.
    pub fn alphabet(&self) -> Vec<i32> {
        (1..=self.generators.len() as i32).flat_map(|i| [i, -i]).collect()
    }

    /// Evaluates a word.
    pub fn evaluate(&self, word: &[i32]) -> Result<GroupElement> {
        let d = self.dim();
        let mut m = Mat::identity(d);
        let mut mi = Mat::identity(d);
        for &l in word {
            if l == 0 || l.unsigned_abs() as usize > self.generators.len() {
                return Err(Error::InvalidFlag(format!("letter {l} out of range")));
            }
            let (g, gi) = self.letter(l);
            m = m.mul(g);
            mi = gi.mul(&mi);
        }
        Ok(GroupElement::new(m, mi, word.to_vec()))
    }
}

fn check_hyperbolic(p: u32, q: u32, r: u32) -> Result<()> {
    let s = 1.0 / p as f64 + 1.0 / q as f64 + 1.0 / r as f64;
    if p < 2 || q < 2 || r < 2 || s >= 1.0 - 1e-12 {
        return Err(Error::NotHyperbolicType(p, q, r));
    }
    Ok(())
}

fn rotation2(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_rows(&[&[c, -s], &[s, c]])
}

/// Two elliptic generators `x`, `y` of a `(p,q,r)` triangle group in
/// `SL(2,ℝ)` with `xᵖ = yᵠ = (xy)ʳ = −I`.
pub fn preset_fuchsian_triangle(p: u32, q: u32, r: u32) -> Result<Presentation> {
    check_hyperbolic(p, q, r)?;
    let (a, b, c) = (PI / p as f64, PI / q as f64, PI / r as f64);
    let cosh = (a.cos() * b.cos() + c.cos()) / (a.sin() * b.sin());
    let l = cosh.acosh();
    let x = rotation2(a);
    let dd = Mat::from_diag(&[(l / 2.0).exp(), (-l / 2.0).exp()]);
    let ddi = Mat::from_diag(&[(-l / 2.0).exp(), (l / 2.0).exp()]);
    let y = dd.mul(&rotation2(b)).mul(&ddi);
    Presentation::new(
        vec![x, y],
        vec!["x".into(), "y".into()],
        PresetKind::FuchsianTriangle { p, q, r },
    )
}

/// Action of a `2×2` matrix on binary quadratic forms, basis `e₁², e₁e₂, e₂²`.
pub fn sym2_lift(m2: &Mat) -> Result<Mat> {
    if m2.dim() != 2 {
        return Err(Error::DimMismatch { expected: 2, found: m2.dim() });
    }
    if (m2.det() - 1.0).abs() > matrix::ALGEBRAIC_TOL {
        return Err(Error::NotUnimodular(m2.det()));
    }
    let (p, q, r, s) = (m2.get(0, 0), m2.get(0, 1), m2.get(1, 0), m2.get(1, 1));
    Ok(Mat::from_rows(&[
        &[p * p, p * q, q * q],
        &[2.0 * p * r, p * s + q * r, 2.0 * q * s],
        &[r * r, r * s, s * s],
    ]))
}

/// The Fuchsian triangle preset lifted to `SL(3,ℝ)`.
pub fn preset_sym2_triangle(p: u32, q: u32, r: u32) -> Result<Presentation> {
    let base = preset_fuchsian_triangle(p, q, r)?;
    let gens = base.generators().iter().map(sym2_lift).collect::<Result<Vec<_>>>()?;
    Presentation::new(
        gens,
        vec!["X".into(), "Y".into()],
        PresetKind::Sym2Triangle { p, q, r },
    )
}

/// Cartan matrix of the deformed `(p,q,r)` reflection triangle: diagonal 2,
/// `A₁₂ = −2cos(π/p)·t`, `A₂₁ = −2cos(π/p)/t`, the other pairs symmetric.
pub fn reflection_cartan_matrix(p: u32, q: u32, r: u32, t: f64) -> Vec<Vec<f64>> {
    let c = |n: u32| -2.0 * (PI / n as f64).cos();
    vec![
        vec![2.0, c(p) * t, c(r)],
        vec![c(p) / t, 2.0, c(q)],
        vec![c(r), c(q), 2.0],
    ]
}

/// Projective reflections `ρᵢ = I − eᵢ·Aᵢ` (row `i` of the Cartan matrix).
pub fn reflections_from_cartan(a: &[Vec<f64>]) -> Vec<Mat> {
    let d = a.len();
    (0..d)
        .map(|i| {
            let mut m = Mat::identity(d);
            for j in 0..d {
                m.set(i, j, m.get(i, j) - a[i][j]);
            }
            m
        })
        .collect()
}

/// Orientation-preserving generators `ρ₁ρ₂`, `ρ₂ρ₃` of the deformed reflection group.
pub fn preset_reflection_deformation(p: u32, q: u32, r: u32, t: f64) -> Result<Presentation> {
    preset_reflection_deformation_window(p, q, r, t, REFLECTION_WINDOW)
}

/// [`preset_reflection_deformation`] with an explicit parameter window.
pub fn preset_reflection_deformation_window(
    p: u32,
    q: u32,
    r: u32,
    t: f64,
    window: (f64, f64),
) -> Result<Presentation> {
    check_hyperbolic(p, q, r)?;
    if !(t > window.0 && t < window.1) {
        return Err(Error::OutsideWindow(t, window.0, window.1));
    }
    let a = reflection_cartan_matrix(p, q, r, t);
    let rho = reflections_from_cartan(&a);
    let gens = vec![rho[0].mul(&rho[1]), rho[1].mul(&rho[2])];
    let mut pres = Presentation::new(
        gens,
        vec!["a".into(), "b".into()],
        PresetKind::Reflection { p, q, r, t },
    )?;
    pres.cartan_datum = Some(a);
    // Discreteness smoke test: no short word may land near, but not on, the identity.
    let ball = enumerate_ball(&pres, 4, DEDUPE_TOL)?;
    let id = Mat::identity(3);
    for g in &ball {
        let off = g.mat().max_abs_diff(&id);
        if off <= 1e-6 && g.word().len() >= 2 {
            return Err(Error::NonDiscreteSuspected(g.word().to_vec()));
        }
    }
    Ok(pres)
}

/// Scale-free comparison form: sign-normalized for even `d`, divided by `max(1, max|mᵢⱼ|)`.
fn dedupe_form(m: &Mat) -> Mat {
    let m = if m.dim() % 2 == 0 { m.sign_normalized() } else { m.clone() };
    m.scale(1.0 / m.max_abs().max(1.0))
}

const BUCKET: f64 = 1e-4;

fn bucket_key(form: &Mat) -> i64 {
    let s: f64 = form
        .row_major()
        .iter()
        .enumerate()
        .map(|(k, x)| x * (0.5 + 0.5 * ((k as f64 + 1.0) * 0.618_033_988_749_895).fract()))
        .sum();
    (s / BUCKET).floor() as i64
}

struct Dedupe {
    buckets: HashMap<i64, Vec<usize>>,
    forms: Vec<Mat>,
    tol: f64,
}

impl Dedupe {
    fn new(tol: f64) -> Self {
        Dedupe {
            buckets: HashMap::new(),
            forms: Vec::new(),
            tol,
        }
    }

    /// `Ok(true)` when `form` is new (and records it).
    fn insert(&mut self, form: Mat, key: i64) -> Result<bool> {
        for k in [key - 1, key, key + 1] {
            if let Some(ids) = self.buckets.get(&k) {
                for &i in ids {
                    let diff = self.forms[i].max_abs_diff(&form);
                    if diff <= self.tol {
                        return Ok(false);
                    }
                    if diff <= 10.0 * self.tol {
                        return Err(Error::ToleranceCollision(diff));
                    }
                }
            }
        }
        self.buckets.entry(key).or_default().push(self.forms.len());
        self.forms.push(form);
        Ok(true)
    }
}

/// All distinct elements represented by freely reduced words of length
/// `≤ radius`, each under its shortlex-least word, identity excluded.
///
/// Matrices are compared after scaling by `max(1, max|mᵢⱼ|)` (and sign
/// normalization for even `d`); a pair closer than `dedupe_tol` is one
/// element, a pair between `dedupe_tol` and `10·dedupe_tol` is an error.
pub fn enumerate_ball(p: &Presentation, radius: usize, dedupe_tol: f64) -> Result<Vec<GroupElement>> {
    if radius < 1 {
        return Err(Error::InsufficientData("radius must be at least 1".into()));
    }
    let d = p.dim();
    let alphabet = p.alphabet();
    let mut seen = Dedupe::new(dedupe_tol);
    let id_form = dedupe_form(&Mat::identity(d));
    let id_key = bucket_key(&id_form);
    seen.insert(id_form, id_key)?;
    let mut out: Vec<GroupElement> = Vec::new();
    let mut frontier = vec![GroupElement::identity(d)];
    for _ in 0..radius {
        let candidates: Vec<(GroupElement, Mat, i64)> = frontier
            .par_iter()
            .flat_map_iter(|g| {
                let last = g.word().last().copied();
                alphabet
                    .iter()
                    .filter(move |&&l| last != Some(-l))
                    .map(move |&l| {
                        let (m, mi) = p.letter(l);
                        let mut w = g.word().to_vec();
                        w.push(l);
                        let e = GroupElement::new(g.mat().mul(m), mi.mul(g.inv_mat()), w);
                        let form = dedupe_form(e.mat());
                        let key = bucket_key(&form);
                        (e, form, key)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut next = Vec::new();
        for (e, form, key) in candidates {
            if seen.insert(form, key)? {
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// One ray of the limit cone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitConeSample {
    pub direction: CartanVector,
    /// Chamber angle of the direction (`d = 3`; `0` for `d = 2`).
    pub angle: f64,
    /// Translation length.
    pub norm: f64,
    pub word: Vec<i32>,
}

/// Sampled limit cone with its convexity and symmetry diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeSummary {
    pub samples: Vec<LimitConeSample>,
    pub interval: (f64, f64),
    /// Consecutive angular gaps between sorted sample angles.
    pub convexity_gaps: Vec<f64>,
    /// Hausdorff distance (in angle) between the samples and their `ι`-image.
    pub iota_asymmetry: f64,
}

impl ConeSummary {
    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn max_gap(&self) -> f64 {
        self.convexity_gaps.iter().copied().fold(0.0, f64::max)
    }
}

fn direction_angle(v: &CartanVector) -> Result<f64> {
    match v.dim() {
        2 => Ok(0.0),
        3 => v.chamber_angle(),
        d => Err(Error::DimMismatch { expected: 3, found: d }),
    }
}

/// Normalized Jordan projections of the elements with translation length at
/// least `min_norm`.
pub fn limit_cone(elements: &[GroupElement], min_norm: f64) -> Result<ConeSummary> {
    let computed: Vec<Result<Option<LimitConeSample>>> = elements
        .par_iter()
        .map(|g| {
            let j = g.jordan()?;
            let norm = j.norm();
            if norm < min_norm {
                return Ok(None);
            }
            let direction = j.scaled(1.0 / norm);
            let angle = direction_angle(&direction)?;
            Ok(Some(LimitConeSample {
                direction,
                angle,
                norm,
                word: g.word().to_vec(),
            }))
        })
        .collect();
    let mut samples = Vec::new();
    for c in computed {
        if let Some(s) = c? {
            samples.push(s);
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyCone);
    }
    let mut angles: Vec<f64> = samples.iter().map(|s| s.angle).collect();
    angles.sort_by(f64::total_cmp);
    let interval = (angles[0], angles[angles.len() - 1]);
    let convexity_gaps = angles.windows(2).map(|w| w[1] - w[0]).collect();
    // ι acts on the chamber angle as θ ↦ −θ.
    let mirrored: Vec<f64> = angles.iter().rev().map(|a| -a).collect();
    let iota_asymmetry = angles
        .iter()
        .map(|a| nearest_distance(&mirrored, *a))
        .fold(0.0, f64::max);
    Ok(ConeSummary {
        samples,
        interval,
        convexity_gaps,
        iota_asymmetry,
    })
}

fn nearest_distance(sorted: &[f64], x: f64) -> f64 {
    let i = sorted.partition_point(|v| *v < x);
    let mut best = f64::INFINITY;
    if i < sorted.len() {
        best = best.min((sorted[i] - x).abs());
    }
    if i > 0 {
        best = best.min((x - sorted[i - 1]).abs());
    }
    best
}

/// Fitted quasi-isometry constants of the orbit map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QiFit {
    pub a_lower: f64,
    pub b_lower: f64,
    pub a_upper: f64,
    pub b_upper: f64,
    /// `a_lower > floor`.
    pub verdict: bool,
    /// Word lengths used and the extreme orbit distances per length.
    pub lengths: Vec<usize>,
    pub d_min: Vec<f64>,
    pub d_max: Vec<f64>,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits `A⁻¹|γ| − B ≤ d(x, γx) ≤ A|γ| + B` from the per-length extremes of
/// orbit distance: slopes are least-squares fits of the maxima and minima
/// against word length, offsets the smallest that make the envelopes hold.
pub fn qi_constants(elements: &[GroupElement], base: &SpdPoint, floor: f64) -> Result<QiFit> {
    if elements.len() < 20 {
        return Err(Error::InsufficientData(format!("{} elements, need 20", elements.len())));
    }
    let dists: Vec<Result<(usize, f64)>> = elements
        .par_iter()
        .map(|g| {
            let y = base.translate(g.mat(), g.inv_mat());
            Ok((g.word().len(), distance(base, &y)?))
        })
        .collect();
    let mut by_len: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for r in dists {
        let (k, dist) = r?;
        let e = by_len.entry(k).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(dist);
        e.1 = e.1.max(dist);
    }
    if by_len.len() < 3 {
        return Err(Error::InsufficientData(format!("{} word lengths, need 3", by_len.len())));
    }
    let lengths: Vec<usize> = by_len.keys().copied().collect();
    let xs: Vec<f64> = lengths.iter().map(|&k| k as f64).collect();
    let d_min: Vec<f64> = by_len.values().map(|v| v.0).collect();
    let d_max: Vec<f64> = by_len.values().map(|v| v.1).collect();
    let a_upper = slope(&xs, &d_max);
    let a_lower = slope(&xs, &d_min);
    let b_upper = xs
        .iter()
        .zip(&d_max)
        .map(|(k, d)| d - a_upper * k)
        .fold(0.0, f64::max);
    let b_lower = xs
        .iter()
        .zip(&d_min)
        .map(|(k, d)| a_lower * k - d)
        .fold(0.0, f64::max);
    Ok(QiFit {
        a_lower,
        b_lower,
        a_upper,
        b_upper,
        verdict: a_lower > floor,
        lengths,
        d_min,
        d_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_gen() -> Presentation {
        Presentation::single(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap()
    }

    #[test]
    fn cyclic_ball() {
        let ball = enumerate_ball(&diag_gen(), 3, DEDUPE_TOL).unwrap();
        assert_eq!(ball.len(), 6);
        let words: Vec<Vec<i32>> = ball.iter().map(|g| g.word().to_vec()).collect();
        assert_eq!(words[0], vec![1]);
        assert_eq!(words[1], vec![-1]);
        assert_eq!(words[5], vec![-1, -1, -1]);
    }

    #[test]
    fn free_counting() {
        let a = Mat::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let b = Mat::from_rows(&[&[1.0, 0.0, 0.0], &[2.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let p = Presentation::custom(vec![a, b]).unwrap();
        let ball = enumerate_ball(&p, 2, DEDUPE_TOL).unwrap();
        assert_eq!(ball.len(), 4 + 4 * 3);
        assert!(ball.iter().all(|g| is_freely_reduced(g.word())));
    }

    #[test]
    fn sym2_ball_collapses() {
        let p = preset_sym2_triangle(2, 3, 7).unwrap();
        let ball = enumerate_ball(&p, 5, DEDUPE_TOL).unwrap();
        let free: usize = (1..=5).map(|k| 4 * 3usize.pow(k - 1)).sum();
        assert!(ball.len() < free);
    }

    #[test]
    fn jordan_examples() {
        let id = GroupElement::identity(3);
        assert!(id.jordan().unwrap().norm() < 1e-15);
        let g = GroupElement::from_matrix(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap();
        let ln2 = 2.0_f64.ln();
        for (x, e) in g.jordan().unwrap().coords().iter().zip([ln2, 0.0, -ln2]) {
            assert!((x - e).abs() < 1e-14);
        }
        assert!((g.translation_length().unwrap() - 2.0_f64.sqrt() * ln2).abs() < 1e-14);
        let u = GroupElement::from_matrix(Mat::from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        assert!(u.jordan().unwrap().norm() < 1e-12);
    }

    #[test]
    fn displacement_matches_translation_length() {
        let g = GroupElement::from_matrix(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap();
        let m = displacement_minimum(&g, 200).unwrap();
        assert!((m - g.translation_length().unwrap()).abs() < 1e-4);
    }

    #[test]
    fn proximality_examples() {
        let g = GroupElement::from_matrix(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap();
        let p = proximality_check(&g, 1e-9);
        assert!(p.proximal && p.biproximal && p.positively && p.positively_bi);
        let rot = GroupElement::from_matrix(Mat::from_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        let p = proximality_check(&rot, 1e-9);
        assert!(!p.proximal && !p.biproximal && !p.positively);
        // eigenvalues (−2, −1, 1/2): proximal with a negative leading eigenvalue
        let neg = GroupElement::from_matrix(Mat::from_diag(&[-2.0, -1.0, 0.5])).unwrap();
        let p = proximality_check(&neg, 1e-9);
        assert!(p.proximal && !p.positively);
    }

    #[test]
    fn fuchsian_relations() {
        let pres = preset_fuchsian_triangle(2, 3, 7).unwrap();
        let x = pres.evaluate(&[1]).unwrap();
        let y = pres.evaluate(&[2]).unwrap();
        let xy = x.mul(&y);
        assert_eq!(finite_order(&x, 10, 1e-8), Some(2));
        assert_eq!(finite_order(&y, 10, 1e-8), Some(3));
        assert_eq!(finite_order(&xy, 10, 1e-8), Some(7));
        assert!((x.mat().trace().abs() - 2.0 * (PI / 2.0).cos()).abs() < 1e-9);
        assert!((y.mat().trace().abs() - 2.0 * (PI / 3.0).cos()).abs() < 1e-9);
        assert_eq!(preset_fuchsian_triangle(2, 3, 5).unwrap_err(), Error::NotHyperbolicType(2, 3, 5));
    }

    #[test]
    fn sym2_examples() {
        assert!(sym2_lift(&Mat::identity(2)).unwrap().max_abs_diff(&Mat::identity(3)) < 1e-15);
        let t = 1.7;
        let l = sym2_lift(&Mat::from_diag(&[t, 1.0 / t])).unwrap();
        assert!(l.max_abs_diff(&Mat::from_diag(&[t * t, 1.0, 1.0 / (t * t)])) < 1e-14);
        assert!(matches!(sym2_lift(&Mat::from_diag(&[2.0, 1.0])), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn reflection_examples() {
        let a = reflection_cartan_matrix(3, 3, 4, 2.0);
        for r in reflections_from_cartan(&a) {
            assert!(r.mul(&r).max_abs_diff(&Mat::identity(3)) < 1e-9);
            assert!((r.det() + 1.0).abs() < 1e-12);
        }
        let p = preset_reflection_deformation(3, 3, 4, 2.0).unwrap();
        for g in p.generators() {
            assert!((g.det() - 1.0).abs() < 1e-9);
        }
        assert!(p.cartan_datum().is_some());
        assert!(matches!(
            preset_reflection_deformation(3, 3, 4, 7.0),
            Err(Error::OutsideWindow(..))
        ));
    }

    #[test]
    fn cone_of_powers() {
        let ball = enumerate_ball(&diag_gen(), 5, DEDUPE_TOL).unwrap();
        let cone = limit_cone(&ball, MIN_NORM).unwrap();
        assert_eq!(cone.samples.len(), 10);
        assert!(cone.width() < 1e-12);
        assert!(cone.iota_asymmetry < 1e-12);
        assert!(matches!(limit_cone(&ball, 1e6), Err(Error::EmptyCone)));
    }

    #[test]
    fn qi_of_powers() {
        let ball = enumerate_ball(&diag_gen(), 12, DEDUPE_TOL).unwrap();
        let fit = qi_constants(&ball, &SpdPoint::basepoint(3), QI_FLOOR).unwrap();
        let l = 2.0_f64.sqrt() * 2.0_f64.ln();
        assert!((fit.a_lower - l).abs() < 1e-8 && (fit.a_upper - l).abs() < 1e-8);
        assert!(fit.b_lower < 1e-8 && fit.b_upper < 1e-8);
        assert!(fit.verdict);
        let small = enumerate_ball(&diag_gen(), 3, DEDUPE_TOL).unwrap();
        assert!(matches!(
            qi_constants(&small, &SpdPoint::basepoint(3), QI_FLOOR),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn word_reduction() {
        assert_eq!(reduce_concat(&[1, 2], &[-2, -1, 3]), vec![3]);
        assert!(!is_freely_reduced(&[1, -1]));
        let g = diag_gen().evaluate(&[1, 1]).unwrap();
        assert_eq!(g.inverse().word(), &[-1, -1]);
        assert_eq!(g.pow(2).word(), &[1, 1, 1, 1]);
    }
}
