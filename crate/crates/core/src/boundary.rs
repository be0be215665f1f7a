//! Flags and the eigenvalue–flag model of the visual boundary `∂X`.
//!
//! A boundary point is a flag `V₁ ⊂ … ⊂ V_k = ℝ^d` together with strictly
//! decreasing eigenvalues `λ₁ > … > λ_k`, subject to `Σ mᵢλᵢ = 0` and
//! `Σ mᵢλᵢ² = 1` where `mᵢ = dim Vᵢ − dim Vᵢ₋₁`. It is the endpoint of the
//! unit-speed geodesic from the basepoint whose generator has eigenspaces
//! `Vᵢ ⊖ Vᵢ₋₁` and eigenvalues `λᵢ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, cross, sign_normalized_vec, CartanVector, Mat};

/// Default relative gap below which eigenvalues merge into one flag step.
pub const CLUSTER_EPS: f64 = 1e-6;

/// A nested chain of subspaces; `Vᵢ` is spanned by the first
/// `m₁ + … + mᵢ` columns of the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    basis: Mat,
    signature: Vec<usize>,
}

impl Flag {
    /// Columns are normalized to unit length, first nonzero coordinate positive.
    pub fn new(basis: &Mat, signature: Vec<usize>) -> Result<Self> {
        let d = basis.dim();
        if signature.is_empty() || signature.contains(&0) {
            return Err(Error::InvalidFlag(format!("bad signature {signature:?}")));
        }
        if signature.iter().sum::<usize>() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: signature.iter().sum(),
            });
        }
        if !basis.is_finite() {
            return Err(Error::InvalidFlag("non-finite basis".into()));
        }
        let cols: Vec<Vec<f64>> = (0..d).map(|j| basis.column(j)).collect();
        if cols.iter().any(|c| c.iter().all(|x| *x == 0.0)) {
            return Err(Error::InvalidFlag("zero column".into()));
        }
        let cols: Vec<Vec<f64>> = cols.into_iter().map(sign_normalized_vec).collect();
        let basis = Mat::from_columns(&cols);
        if basis.det().abs() < 1e-10 {
            return Err(Error::InvalidFlag(format!(
                "basis is rank deficient (|det| = {:e})",
                basis.det().abs()
            )));
        }
        Ok(Flag { basis, signature })
    }

    /// A full flag from a basis.
    pub fn full(basis: &Mat) -> Result<Self> {
        Flag::new(basis, vec![1; basis.dim()])
    }

    /// `⟨e₁⟩ ⊂ ⟨e₁, e₂⟩ ⊂ …`.
    pub fn standard(d: usize) -> Self {
        Flag {
            basis: Mat::identity(d),
            signature: vec![1; d],
        }
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn signature(&self) -> &[usize] {
        &self.signature
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_full(&self) -> bool {
        self.signature.iter().all(|&m| m == 1)
    }

    /// Cumulative dimensions `dim V₁, …, dim V_k`.
    pub fn dims(&self) -> Vec<usize> {
        self.signature
            .iter()
            .scan(0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect()
    }

    /// Orthonormal frame adapted to the flag (Gram–Schmidt of the basis).
    pub fn frame(&self) -> Mat {
        let kan = matrix::gram_schmidt_kan(&self.basis).expect("flag basis has full rank");
        kan.k
    }

    /// The first `n` basis columns, orthonormalized.
    pub fn leading_subspace(&self, n: usize) -> Vec<Vec<f64>> {
        let k = self.frame();
        (0..n).map(|j| k.column(j)).collect()
    }

    /// The image `g·F`.
    pub fn act(&self, g: &Mat) -> Result<Flag> {
        Flag::new(&g.mul(&self.basis), self.signature.clone())
    }

    /// All 9 (or `d²`) basis entries, row-major, for reports.
    pub fn entries(&self) -> Vec<f64> {
        self.basis.row_major()
    }
}

fn det_of_columns(cols: &[Vec<f64>]) -> f64 {
    Mat::from_columns(cols).det()
}

/// Oppositeness: `Vᵢ ⊕ W_{d−i} = ℝ^d` for every `0 < i < d`.
///
/// The score is the smallest `|det|` of the concatenated orthonormal bases,
/// which is the product of the sines of the principal angles between `Vᵢ` and
/// `W_{d−i}^⊥`. Returns `(score > tol, score)`.
pub fn is_opposite(f: &Flag, f2: &Flag, tol: f64) -> Result<(bool, f64)> {
    let d = f.dim();
    if f2.dim() != d {
        return Err(Error::DimMismatch {
            expected: d,
            found: f2.dim(),
        });
    }
    if !f.is_full() || !f2.is_full() {
        return Err(Error::InvalidFlag("oppositeness needs full flags".into()));
    }
    let qa = f.frame();
    let qb = f2.frame();
    let mut score = f64::INFINITY;
    for i in 1..d {
        let mut cols: Vec<Vec<f64>> = (0..i).map(|j| qa.column(j)).collect();
        cols.extend((0..d - i).map(|j| qb.column(j)));
        score = score.min(det_of_columns(&cols).abs());
    }
    if d == 1 {
        score = 1.0;
    }
    Ok((score > tol, score))
}

/// Largest sine of a principal angle between two subspaces of equal dimension.
pub fn subspace_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for v in a {
        let mut r = v.clone();
        for w in b {
            let c: f64 = w.iter().zip(&r).map(|(x, y)| x * y).sum();
            for (x, y) in r.iter_mut().zip(w) {
                *x -= c * y;
            }
        }
        worst = worst.max(r.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    worst.min(1.0)
}

/// Distance between full flags of the same dimension: the largest subspace gap
/// over the proper members of the chain.
pub fn flag_distance(f: &Flag, f2: &Flag) -> f64 {
    let d = f.dim();
    let qa = f.frame();
    let qb = f2.frame();
    (1..d)
        .map(|i| {
            let a: Vec<Vec<f64>> = (0..i).map(|j| qa.column(j)).collect();
            let b: Vec<Vec<f64>> = (0..i).map(|j| qb.column(j)).collect();
            subspace_gap(&a, &b)
        })
        .fold(0.0, f64::max)
}

/// A point of `∂X`: a flag and one eigenvalue per flag step.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    flag: Flag,
    direction: Vec<f64>,
}

impl BoundaryPoint {
    pub fn new(flag: Flag, direction: Vec<f64>) -> Result<Self> {
        let sig = flag.signature();
        if direction.len() != sig.len() {
            return Err(Error::DimMismatch {
                expected: sig.len(),
                found: direction.len(),
            });
        }
        let weighted: f64 = sig.iter().zip(&direction).map(|(&m, l)| m as f64 * l).sum();
        let sq: f64 = sig.iter().zip(&direction).map(|(&m, l)| m as f64 * l * l).sum();
        if weighted.abs() > 1e-9 {
            return Err(Error::InvalidBoundaryPoint(format!("Σ mλ = {weighted:e}")));
        }
        if (sq - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidBoundaryPoint(format!("Σ mλ² = {sq}")));
        }
        if direction.windows(2).any(|w| w[0] - w[1] < 1e-12) {
            return Err(Error::InvalidBoundaryPoint("eigenvalues not strictly decreasing".into()));
        }
        Ok(BoundaryPoint { flag, direction })
    }

    /// The regular point with the given full flag and unit chamber direction.
    pub fn regular(flag: Flag, direction: &CartanVector) -> Result<Self> {
        BoundaryPoint::new(flag, direction.coords().to_vec())
    }

    /// `H₁ = √((d−1)/d)·diag(1, −1/(d−1), …)`, the point with flag `⟨e₁⟩ ⊂ ℝ^d`.
    pub fn h1(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimMismatch { expected: 2, found: d });
        }
        let s = ((d - 1) as f64 / d as f64).sqrt();
        let flag = Flag::new(&Mat::identity(d), vec![1, d - 1])?;
        BoundaryPoint::new(flag, vec![s, -s / (d - 1) as f64])
    }

    pub fn flag(&self) -> &Flag {
        &self.flag
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.flag.dim()
    }

    pub fn is_regular(&self) -> bool {
        self.flag.is_full()
    }

    /// Eigenvalues repeated by multiplicity: the diagonal of the generator in the flag frame.
    pub fn diagonal(&self) -> Vec<f64> {
        self.flag
            .signature()
            .iter()
            .zip(&self.direction)
            .flat_map(|(&m, &l)| std::iter::repeat_n(l, m))
            .collect()
    }

    /// The diagonal as a chamber vector.
    pub fn cartan(&self) -> CartanVector {
        CartanVector::new(self.diagonal()).expect("boundary direction is in the chamber")
    }

    /// The unit symmetric traceless generator `Y = K diag(λ) Kᵗ`.
    pub fn matrix(&self) -> Mat {
        let k = self.flag.frame();
        k.mul(&Mat::from_diag(&self.diagonal())).mul(&k.transpose()).symmetrize()
    }

    /// The image `g·ξ` (flag moved by `g`, same direction).
    pub fn act(&self, g: &Mat) -> Result<BoundaryPoint> {
        Ok(BoundaryPoint {
            flag: self.flag.act(g)?,
            direction: self.direction.clone(),
        })
    }
}

/// Splits a unit symmetric traceless matrix into its flag and eigenvalues.
pub fn boundary_point_of(y: &Mat, eps_cluster: f64) -> Result<BoundaryPoint> {
    let scale = y.norm().max(1.0);
    if !y.is_finite() || y.asymmetry() > 1e-12 * scale {
        return Err(Error::NotSymmetric(y.asymmetry()));
    }
    if y.trace().abs() > 1e-9 {
        return Err(Error::NotUnit(format!("trace {:e}", y.trace())));
    }
    if (y.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnit(format!("norm {}", y.norm())));
    }
    let (vals, vecs) = matrix::sym_eigen(&y.symmetrize());
    let d = vals.len();
    let spread = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut signature = Vec::new();
    let mut direction = Vec::new();
    let mut i = 0;
    while i < d {
        let mut j = i + 1;
        while j < d && vals[j - 1] - vals[j] < eps_cluster * spread {
            j += 1;
        }
        signature.push(j - i);
        direction.push(vals[i..j].iter().sum::<f64>() / (j - i) as f64);
        i = j;
    }
    // Re-impose the trace and norm conditions exactly after averaging.
    let mean: f64 = signature.iter().zip(&direction).map(|(&m, l)| m as f64 * l).sum::<f64>() / d as f64;
    for l in &mut direction {
        *l -= mean;
    }
    let n: f64 = signature
        .iter()
        .zip(&direction)
        .map(|(&m, l)| m as f64 * l * l)
        .sum::<f64>()
        .sqrt();
    for l in &mut direction {
        *l /= n;
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| vecs.column(j)).collect();
    let flag = Flag::new(&Mat::from_columns(&cols), signature)?;
    BoundaryPoint::new(flag, direction)
}

/// An equivalence class of Weyl chambers, identified with a full flag.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylChamberClass {
    pub flag: Flag,
}

/// The chamber of a regular boundary point.
pub fn chamber_of(bp: &BoundaryPoint) -> Result<WeylChamberClass> {
    if !bp.is_regular() {
        return Err(Error::NotRegular(bp.flag().signature().to_vec()));
    }
    Ok(WeylChamberClass {
        flag: bp.flag().clone(),
    })
}

/// `ι(a)`: reverse the coordinates and negate.
pub fn opposite_involution(a: &CartanVector) -> CartanVector {
    let v: Vec<f64> = a.coords().iter().rev().map(|x| -x).collect();
    CartanVector::new(v).expect("reversal preserves the chamber")
}

/// Spectral gap data for a `d = 3` element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenData {
    /// Eigenvalues `λ₁, λ₂, λ₃` (real, sorted by decreasing modulus).
    pub values: [f64; 3],
    /// `|λ₁/λ₂| − 1` and `|λ₂/λ₃| − 1`.
    pub gaps: [f64; 2],
}

/// Real spectrum of a `d = 3` unimodular element from the dominant
/// eigenvalues of `g` and of `g⁻¹`, so that both ends stay accurate.
pub fn real_spectrum3(g: &Mat, g_inv: &Mat, tol: f64) -> Result<EigenData> {
    if g.dim() != 3 {
        return Err(Error::DimMismatch { expected: 3, found: g.dim() });
    }
    let spec = matrix::spectrum(g)?;
    let spec_inv = matrix::spectrum(g_inv)?;
    let (top, bottom) = (spec[0], spec_inv[0]);
    // A complex pair shares its modulus, so it sits at the top of one of the two spectra.
    for s in [&spec, &spec_inv] {
        let lead = s[0].norm();
        for z in s.iter().filter(|z| z.norm() >= 0.5 * lead) {
            if z.im.abs() > tol * z.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::NonRealSpectrum { re: z.re, im: z.im });
            }
        }
    }
    let l1 = top.re;
    let l3 = 1.0 / bottom.re;
    let det = g.det().signum();
    let l2 = det / (l1 * l3);
    let gaps = [(l1 / l2).abs() - 1.0, (l2 / l3).abs() - 1.0];
    Ok(EigenData {
        values: [l1, l2, l3],
        gaps,
    })
}

/// Unit eigenvector for the dominant eigenvalue `lambda` of `m`.
fn dominant_vector(m: &Mat, lambda: f64) -> Result<Vec<f64>> {
    let d = m.dim();
    let shifted = m.sub(&Mat::identity(d).scale(lambda));
    let (_, _, v) = matrix::svd_sorted(&shifted)?;
    Ok(sign_normalized_vec(v.column(d - 1)))
}

/// Full eigenvector frame `(v⁺, v₀, v⁻)` of a biproximal `d = 3` element.
///
/// `v⁺` and `v⁻` are the dominant eigenvectors of `g` and `g⁻¹`; `v₀` is
/// cut out by the dominant left eigenvectors of both.
pub fn eigen_frame3(g: &Mat, g_inv: &Mat, tol: f64) -> Result<(EigenData, [Vec<f64>; 3])> {
    let data = real_spectrum3(g, g_inv, tol)?;
    let floor = tol.max(matrix::spectral_noise(g, g_inv));
    if data.gaps[0] < floor || data.gaps[1] < floor {
        return Err(Error::NotProximal {
            gaps: data.gaps.to_vec(),
        });
    }
    let [l1, _, l3] = data.values;
    let v_plus = dominant_vector(g, l1)?;
    let v_minus = dominant_vector(g_inv, 1.0 / l3)?;
    let w_plus = dominant_vector(&g.transpose(), l1)?;
    let w_minus = dominant_vector(&g_inv.transpose(), 1.0 / l3)?;
    let v0 = sign_normalized_vec(cross(&w_plus, &w_minus));
    Ok((data, [v_plus, v0, v_minus]))
}

/// The attracting flag `⟨v⁺⟩ ⊂ ⟨v⁺, v₀⟩ ⊂ ℝ³` of a biproximal element.
pub fn attracting_flag(g: &Mat, tol: f64) -> Result<Flag> {
    let inv = g.inverse()?;
    attracting_flag_pair(g, &inv, tol)
}

/// [`attracting_flag`] with a known inverse.
pub fn attracting_flag_pair(g: &Mat, g_inv: &Mat, tol: f64) -> Result<Flag> {
    let (_, [a, b, c]) = eigen_frame3(g, g_inv, tol)?;
    Flag::full(&Mat::from_columns(&[a, b, c]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h1_point() {
        let s = (2.0_f64 / 3.0).sqrt();
        let y = Mat::from_diag(&[s, -s / 2.0, -s / 2.0]);
        let bp = boundary_point_of(&y, CLUSTER_EPS).unwrap();
        assert_eq!(bp.flag().signature(), &[1, 2]);
        assert!((bp.direction()[0] - 0.816_496_580_927_726).abs() < 1e-12);
        assert!((bp.direction()[1] + 0.408_248_290_463_863).abs() < 1e-12);
        assert_eq!(bp, BoundaryPoint::h1(3).unwrap());
        assert!(matches!(chamber_of(&bp), Err(Error::NotRegular(_))));
    }

    #[test]
    fn distinct_diagonal_gives_standard_flag() {
        let n = (0.9_f64 * 0.9 + 0.1 * 0.1 + 1.0).sqrt();
        let y = Mat::from_diag(&[0.9 / n, 0.1 / n, -1.0 / n]);
        let bp = boundary_point_of(&y, CLUSTER_EPS).unwrap();
        assert!(bp.is_regular());
        assert!(bp.flag().basis().max_abs_diff(&Mat::identity(3)) < 1e-12);
        assert!(bp.matrix().max_abs_diff(&y) < 1e-12);
        assert_eq!(chamber_of(&bp).unwrap().flag, Flag::standard(3));
    }

    #[test]
    fn boundary_point_rejects_bad_input() {
        let y = Mat::from_diag(&[1.0, 0.0, 0.0]);
        assert!(matches!(boundary_point_of(&y, CLUSTER_EPS), Err(Error::NotUnit(_))));
        let y = Mat::from_rows(&[&[0.0, 0.5, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(matches!(boundary_point_of(&y, CLUSTER_EPS), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn opposite_examples() {
        let std = Flag::standard(3);
        let reversed = Flag::full(&Mat::from_rows(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]])).unwrap();
        let (ok, score) = is_opposite(&std, &reversed, 1e-8).unwrap();
        assert!(ok);
        assert!((score - 1.0).abs() < 1e-14);

        let adjacent = Flag::full(&Mat::from_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        let (ok, score) = is_opposite(&std, &adjacent, 1e-8).unwrap();
        assert!(!ok);
        assert!(score < 1e-14);

        let (ok, score) = is_opposite(&std, &std, 1e-8).unwrap();
        assert!(!ok && score == 0.0);

        assert!(matches!(
            is_opposite(&std, &Flag::standard(4), 1e-8),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn attracting_flag_diagonal() {
        let g = Mat::from_diag(&[2.0, 1.0, 0.5]);
        let f = attracting_flag(&g, 1e-9).unwrap();
        assert!(f.basis().max_abs_diff(&Mat::identity(3)) < 1e-12);
        assert!(matches!(
            attracting_flag(&Mat::identity(3), 1e-9),
            Err(Error::NotProximal { .. })
        ));
        let rot = Mat::from_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(matches!(attracting_flag(&rot, 1e-9), Err(Error::NonRealSpectrum { .. })));
    }

    #[test]
    fn involution_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = CartanVector::new(vec![s, 0.0, -s]).unwrap();
        assert_eq!(opposite_involution(&a), a);
        let b = CartanVector::new(vec![0.9, 0.1, -1.0]).unwrap();
        assert_eq!(opposite_involution(&b).coords(), &[1.0, -0.1, -0.9]);
        assert_eq!(opposite_involution(&opposite_involution(&b)), b);
    }

    #[test]
    fn flag_validation() {
        assert!(Flag::new(&Mat::identity(3), vec![1, 1]).is_err());
        assert!(Flag::new(&Mat::identity(3), vec![0, 3]).is_err());
        let singular = Mat::from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(matches!(Flag::full(&singular), Err(Error::InvalidFlag(_))));
    }
}
