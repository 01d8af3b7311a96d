//! Seeded random band-limited fields for property tests and certificates.
//!
//! Coefficients are complex Gaussians with amplitude `|k|^{-2.5}` on the
//! modes kept by the dealias cutoff, conjugate-symmetrized so the field is
//! real. The mean mode gets unit amplitude.
//!
//! The cutoff is `|k| < n/3` per axis, strictly below the dealias cutoff
//! when `3 | n`, so products of two such fields are resolved without any
//! aliasing into retained modes.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::{Grid, SpectralField};

/// Decay exponent of the coefficient amplitudes.
pub const DECAY: f64 = 2.5;

/// Symmetry in `x3` about `x3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Random real band-limited field on any grid.
pub fn band_limited(grid: &Grid, seed: u64, parity: Option<Parity>) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    band_limited_with(grid, &mut rng, parity)
}

pub fn band_limited_with(
    grid: &Grid,
    rng: &mut ChaCha8Rng,
    parity: Option<Parity>,
) -> SpectralField {
    let nd = grid.ndim();
    let cut: Vec<i64> = (0..nd).map(|a| (grid.dims()[a] as i64 - 1) / 3).collect();
    let mut raw = SpectralField::zeros(grid);
    for flat in 0..grid.len() {
        let k = grid.mode(flat);
        let keep = (0..nd).all(|a| k[a].abs() <= cut[a]);
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        if !keep {
            continue;
        }
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let amp = if k2 == 0.0 { 1.0 } else { k2.powf(-DECAY / 2.0) };
        raw.coeffs_mut()[flat] = Complex64::new(re, im) * amp;
    }
    let mut out = SpectralField::zeros(grid);
    let vaxis = grid.vertical_axis();
    for flat in 0..grid.len() {
        let k = grid.mode(flat);
        let mut c = 0.5 * (raw.coeffs()[flat] + raw.coeff_at([-k[0], -k[1], -k[2]]).conj());
        if let (Some(p), Some(va)) = (parity, vaxis) {
            let mut m = k;
            m[va] = -m[va];
            let cm = 0.5 * (raw.coeff_at(m) + raw.coeff_at([-m[0], -m[1], -m[2]]).conj());
            c = match p {
                Parity::Even => 0.5 * (c + cm),
                Parity::Odd => 0.5 * (c - cm),
            };
        }
        out.coeffs_mut()[flat] = c;
    }
    out
}

/// Several independent components drawn from one stream.
pub fn band_limited_vector(
    grid: &Grid,
    seed: u64,
    parities: &[Option<Parity>],
) -> Vec<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    parities
        .iter()
        .map(|p| band_limited_with(grid, &mut rng, *p))
        .collect()
}

/// Normalizes to unit sup norm on the grid (zero fields are returned as is).
pub fn unit_sup(f: &SpectralField) -> SpectralField {
    let m = f.inverse().max_abs();
    if m == 0.0 {
        f.clone()
    } else {
        f.scale(1.0 / m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_band_limited() {
        let g = Grid::new_3d(12, 16).unwrap();
        let f = band_limited(&g, 7, None);
        assert!(f.conjugate_symmetry_defect() < 1e-15);
        assert_eq!(f.dealias().coeffs(), f.coeffs());
        let again = band_limited(&g, 7, None);
        assert_eq!(f.coeffs(), again.coeffs());
    }

    #[test]
    fn parity_classes() {
        let g = Grid::new_3d(8, 16).unwrap();
        let e = band_limited(&g, 1, Some(Parity::Even)).inverse();
        let o = band_limited(&g, 1, Some(Parity::Odd)).inverse();
        let nv = 16;
        for col in 0..64 {
            for j in 1..nv {
                let a = col * nv + j;
                let b = col * nv + (nv - j);
                assert!((e.values()[a] - e.values()[b]).abs() < 1e-13);
                assert!((o.values()[a] + o.values()[b]).abs() < 1e-13);
            }
        }
    }
}
