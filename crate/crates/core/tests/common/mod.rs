#![allow(dead_code)]

use anosov_core::matrix::{Mat, SpdPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-spread, spread]`, rescaled to determinant 1.
pub fn random_unimodular(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> Mat {
    loop {
        let entries: Vec<f64> = (0..d * d).map(|_| rng.random_range(-spread..spread)).collect();
        let mut m = Mat::from_row_slice(d, &entries).unwrap();
        let det = m.det();
        if det.abs() < 1e-3 {
            continue;
        }
        if det < 0.0 {
            for j in 0..d {
                m.set(0, j, -m.get(0, j));
            }
        }
        return m.scale(det.abs().powf(-1.0 / d as f64));
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> SpdPoint {
    SpdPoint::from_factor(&random_unimodular(rng, d, spread)).unwrap()
}

pub fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> Mat {
    let m = random_unimodular(rng, d, 1.0);
    let kan = anosov_core::matrix::gram_schmidt_kan(&m).unwrap();
    let mut k = kan.k;
    if k.det() < 0.0 {
        for r in 0..d {
            k.set(r, 0, -k.get(r, 0));
        }
    }
    k
}

/// Singular values from the eigenvalues of the Gram matrix `mᵗm`, decreasing.
/// Squaring costs the small ones their relative accuracy; use for
/// well-conditioned input or for the top value only.
pub fn gram_singular_values(m: &Mat) -> Vec<f64> {
    let scale = m.max_abs();
    let n = m.scale(1.0 / scale);
    let (vals, _) = anosov_core::matrix::sym_eigen(&n.transpose().mul(&n));
    vals.iter().map(|v| v.max(0.0).sqrt() * scale).collect()
}
