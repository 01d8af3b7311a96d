//! Anisotropic `L∞_H L^q` norms, vertical mean/fluctuation, the vertical
//! antiderivative `∫_{-π}^{x3}` and the trajectory functionals `X`, `Y`.
//!
//! Vector and tensor valued quantities are normed through their pointwise
//! Euclidean magnitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{inverse, Grid, PhysicalField, SpectralField};

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidArgument(format!("norm exponent q={q} must be >= 1")));
    }
    Ok(())
}

fn check_layered(g: &Grid) -> Result<()> {
    if !g.is_layered() {
        return Err(Error::InvalidGrid(format!(
            "expected a 3D (H, H, V) grid, got dims {:?}",
            g.dims()
        )));
    }
    Ok(())
}

/// `L∞_H L^q` norm of pointwise magnitudes `|m|` laid out on a layered grid.
pub(crate) fn column_norm(grid: &Grid, magnitudes: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return magnitudes.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let (columns, nv) = grid.column_shape();
    let dz = 2.0 * PI / nv as f64;
    let mut best = 0.0f64;
    for c in 0..columns {
        let col = &magnitudes[c * nv..(c + 1) * nv];
        let s: f64 = if q == 1.0 {
            col.iter().map(|v| v.abs()).sum()
        } else if q == 2.0 {
            col.iter().map(|v| v * v).sum()
        } else {
            col.iter().map(|v| v.abs().powf(q)).sum()
        };
        best = best.max(s * dz);
    }
    if q == 1.0 {
        best
    } else {
        best.powf(1.0 / q)
    }
}

/// `sup_{x'} (∫_{-π}^{π} |f(x', z)|^q dz)^{1/q}`; `q = ∞` is the grid sup.
pub fn norm_linf_h_lq(f: &PhysicalField, q: f64) -> Result<f64> {
    check_q(q)?;
    check_layered(f.grid())?;
    Ok(column_norm(f.grid(), f.values(), q))
}

/// Norm of the pointwise Euclidean magnitude of several components.
pub fn norm_vec_linf_h_lq(comps: &[PhysicalField], q: f64) -> Result<f64> {
    check_q(q)?;
    let Some(first) = comps.first() else {
        return Ok(0.0);
    };
    check_layered(first.grid())?;
    let mut mag = vec![0.0; first.grid().len()];
    for c in comps {
        crate::spectral::same_grid(first.grid(), c.grid())?;
        for (m, v) in mag.iter_mut().zip(c.values()) {
            *m += v * v;
        }
    }
    for m in &mut mag {
        *m = m.sqrt();
    }
    Ok(column_norm(first.grid(), &mag, q))
}

/// Same as [`norm_vec_linf_h_lq`] for components given spectrally.
pub fn norm_spectral(comps: &[SpectralField], q: f64) -> Result<f64> {
    let phys: Vec<PhysicalField> = comps.iter().map(inverse).collect();
    norm_vec_linf_h_lq(&phys, q)
}

/// `f̄(x') = (1/2π) ∫_{-π}^{π} f(x', z) dz`, returned on the horizontal grid.
pub fn vertical_average(f: &PhysicalField) -> Result<PhysicalField> {
    let g = f.grid();
    check_layered(g)?;
    let hg = g.horizontal_grid()?;
    let (columns, nv) = g.column_shape();
    let vals = f.values();
    let avg = (0..columns)
        .map(|c| vals[c * nv..(c + 1) * nv].iter().sum::<f64>() / nv as f64)
        .collect();
    Ok(PhysicalField::from_values_unchecked(&hg, avg))
}

/// Extends a horizontal field constantly in `x3`.
pub fn lift(avg: &PhysicalField, grid: &Grid) -> Result<PhysicalField> {
    check_layered(grid)?;
    let (columns, nv) = grid.column_shape();
    if avg.grid().dims() != &grid.dims()[..2] {
        return Err(Error::ShapeMismatch(format!(
            "horizontal dims {:?} vs grid {:?}",
            avg.grid().dims(),
            grid.dims()
        )));
    }
    let mut out = Vec::with_capacity(grid.len());
    for c in 0..columns {
        out.extend(std::iter::repeat_n(avg.values()[c], nv));
    }
    Ok(PhysicalField::from_values_unchecked(grid, out))
}

/// `f̃ = f − f̄`.
pub fn fluctuation(f: &PhysicalField) -> Result<PhysicalField> {
    let avg = lift(&vertical_average(f)?, f.grid())?;
    f.zip_with(&avg, |a, b| a - b)
}

/// Keeps only the `k3 = 0` modes (the vertical mean, still on the 3D grid).
pub fn vertical_mean_spectral(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    let nv = g.dims()[2];
    let mut out = f.clone();
    for (flat, c) in out.coeffs_mut().iter_mut().enumerate() {
        if flat % nv != 0 {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Removes the `k3 = 0` modes.
pub fn fluctuation_spectral(f: &SpectralField) -> SpectralField {
    f.sub(&vertical_mean_spectral(f))
}

/// Spectral `∫_{-π}^{x3}` of the vertically mean-free part of `f`.
///
/// The result is periodic. Mode `k3 ≠ 0` maps to `(e^{ik3x3} − (−1)^{k3})/(ik3)`;
/// the constant parts are collected into `k3 = 0`. The Nyquist mode
/// integrates to `sin(n x3 / 2)/(n/2)`, which vanishes on the grid.
pub fn antiderivative_fluct_spectral(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    let nv = g.dims()[2];
    let mut out = SpectralField::zeros(g);
    let src = f.coeffs();
    let dst = out.coeffs_mut();
    for col in 0..src.len() / nv {
        let base = col * nv;
        let mut constant = Complex64::new(0.0, 0.0);
        for j in 1..nv {
            if j == nv / 2 {
                continue;
            }
            let k3 = g.wavenumber(2, j);
            let c = src[base + j] / Complex64::new(0.0, k3 as f64);
            dst[base + j] = c;
            if k3 % 2 == 0 {
                constant -= c;
            } else {
                constant += c;
            }
        }
        dst[base] = constant;
    }
    out
}

/// `x3 ↦ ∫_{-π}^{x3} f(x', z) dz` on the grid.
///
/// The vertical mean contributes the non-periodic term `(x3 + π)·f̄`,
/// which is added on the physical grid.
pub fn vertical_antiderivative(f: &PhysicalField) -> Result<PhysicalField> {
    let g = f.grid();
    check_layered(g)?;
    let spec = f.forward();
    let mut out = antiderivative_fluct_spectral(&spec).inverse();
    let avg = vertical_average(f)?;
    let z = g.coords(2);
    let nv = z.len();
    for (flat, v) in out.values_mut().iter_mut().enumerate() {
        *v += (z[flat % nv] + PI) * avg.values()[flat / nv];
    }
    Ok(out)
}

/// Norm specification: `t^γ ‖(∇)f‖_{L∞_H L^q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisoNormSpec {
    pub q: f64,
    pub with_gradient: bool,
    pub time_weight: f64,
}

impl AnisoNormSpec {
    pub fn new(q: f64, with_gradient: bool, time_weight: f64) -> Result<Self> {
        check_q(q)?;
        if time_weight.is_nan() || time_weight < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time weight {time_weight} must be >= 0"
            )));
        }
        Ok(Self {
            q,
            with_gradient,
            time_weight,
        })
    }

    pub fn evaluate(&self, comps: &[SpectralField], t: f64) -> Result<f64> {
        let norm = if self.with_gradient {
            norm_spectral(&gradient(comps), self.q)?
        } else {
            norm_spectral(comps, self.q)?
        };
        Ok(if self.time_weight == 0.0 {
            norm
        } else {
            t.powf(self.time_weight) * norm
        })
    }
}

/// All first derivatives `∂_i f_j` of the components, as a flat list.
pub fn gradient(comps: &[SpectralField]) -> Vec<SpectralField> {
    let mut out = Vec::with_capacity(comps.len() * 3);
    for c in comps {
        for axis in 0..c.grid().ndim() {
            out.push(c.derivative(axis, 1));
        }
    }
    out
}

/// `∂_j f` for horizontal `j` only.
pub fn horizontal_gradient(comps: &[SpectralField]) -> Vec<SpectralField> {
    let mut out = Vec::with_capacity(comps.len() * 2);
    for c in comps {
        out.push(c.derivative(0, 1));
        out.push(c.derivative(1, 1));
    }
    out
}

/// Per-time entries of [`TrajectoryFunctionals`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub time: f64,
    pub norm: f64,
    pub weighted_grad: f64,
    pub hgrad: f64,
    pub weighted_hess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFunctionals {
    /// `sup ‖U‖ + sup t^{1/2} ‖∇U‖`
    pub x_value: f64,
    /// `sup ‖u‖ + sup ‖∇_H u‖ + sup t^{1/2} ‖∇∇_H u‖`
    pub y_value: f64,
    pub samples: Vec<FunctionalSample>,
}

/// Evaluates `X` and `Y` over `(time, components)` samples in `L∞_H L^q`.
///
/// Both functionals use the same sample set; callers pass the difference
/// field for `X` and the reference solution for `Y`.
pub fn trajectory_functionals(
    samples: &[(f64, Vec<SpectralField>)],
    q: f64,
) -> Result<TrajectoryFunctionals> {
    check_q(q)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let mut rows = Vec::with_capacity(samples.len());
    for (t, comps) in samples {
        let norm = norm_spectral(comps, q)?;
        let weighted_grad = t.max(0.0).sqrt() * norm_spectral(&gradient(comps), q)?;
        let hg = horizontal_gradient(comps);
        let hgrad = norm_spectral(&hg, q)?;
        let weighted_hess = t.max(0.0).sqrt() * norm_spectral(&gradient(&hg), q)?;
        rows.push(FunctionalSample {
            time: *t,
            norm,
            weighted_grad,
            hgrad,
            weighted_hess,
        });
    }
    let sup = |f: fn(&FunctionalSample) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let x_value = sup(|r| r.norm) + sup(|r| r.weighted_grad);
    let y_value = sup(|r| r.norm) + sup(|r| r.hgrad) + sup(|r| r.weighted_hess);
    Ok(TrajectoryFunctionals {
        x_value,
        y_value,
        samples: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::band_limited;

    fn grid() -> Grid {
        Grid::new_3d(16, 16).unwrap()
    }

    #[test]
    fn norm_examples() {
        let g = grid();
        let one = PhysicalField::from_fn(&g, |_| 1.0);
        assert!((norm_linf_h_lq(&one, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((norm_linf_h_lq(&one, 2.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let f = PhysicalField::from_fn(&g, |x| x[0].cos() * x[2].sin());
        // grid sum of |sin| is not exactly 4 but close at n=16
        let n1 = norm_linf_h_lq(&f, 1.0).unwrap();
        let exact_grid: f64 = g.coords(2).iter().map(|z| z.sin().abs()).sum::<f64>() * g.spacing(2);
        assert!((n1 - exact_grid).abs() < 1e-12);
        assert!((n1 - 4.0).abs() < 0.06);
        // |sin| has kinks, so the grid sum converges only at second order
        let fine = Grid::new_3d(8, 256).unwrap();
        let f2 = PhysicalField::from_fn(&fine, |x| x[0].cos() * x[2].sin());
        assert!((norm_linf_h_lq(&f2, 1.0).unwrap() - 4.0).abs() < 1e-3);
        assert!(norm_linf_h_lq(&f, 0.5).is_err());
        assert!((norm_linf_h_lq(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_examples() {
        let g = grid();
        let s = PhysicalField::from_fn(&g, |x| x[2].sin());
        assert!(vertical_average(&s).unwrap().max_abs() < 1e-15);
        let c = PhysicalField::from_fn(&g, |_| 3.5);
        assert!(vertical_average(&c)
            .unwrap()
            .values()
            .iter()
            .all(|v| (v - 3.5).abs() < 1e-14));
        let c2 = PhysicalField::from_fn(&g, |x| x[2].cos().powi(2));
        assert!(vertical_average(&c2)
            .unwrap()
            .values()
            .iter()
            .all(|v| (v - 0.5).abs() < 1e-14));
        assert!(fluctuation(&c).unwrap().max_abs() < 1e-14);
        let fs = fluctuation(&s).unwrap();
        assert!(fs.zip_with(&s, |a, b| a - b).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn fluctuation_reconstructs() {
        let g = grid();
        let f = band_limited(&g, 3, None).inverse();
        let fl = fluctuation(&f).unwrap();
        let avg = lift(&vertical_average(&f).unwrap(), &g).unwrap();
        let back = fl.zip_with(&avg, |a, b| a + b).unwrap();
        assert!(back.zip_with(&f, |a, b| a - b).unwrap().max_abs() < 1e-14);
        assert!(vertical_average(&fl).unwrap().max_abs() < 1e-14);
        let ff = fluctuation(&fl).unwrap();
        assert!(ff.zip_with(&fl, |a, b| a - b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn antiderivative_examples() {
        let g = grid();
        let f = PhysicalField::from_fn(&g, |x| x[0].cos() * x[2].cos());
        let a = vertical_antiderivative(&f).unwrap();
        let e = PhysicalField::from_fn(&g, |x| x[0].cos() * x[2].sin());
        assert!(a.zip_with(&e, |p, q| p - q).unwrap().max_abs() < 1e-13);
        let one = PhysicalField::from_fn(&g, |_| 1.0);
        let a = vertical_antiderivative(&one).unwrap();
        let e = PhysicalField::from_fn(&g, |x| x[2] + PI);
        assert!(a.zip_with(&e, |p, q| p - q).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn antiderivative_vs_cumulative_trapezoid() {
        let g = Grid::new_3d(8, 64).unwrap();
        let f = band_limited(&g, 11, None).inverse();
        let a = vertical_antiderivative(&f).unwrap();
        // the grid starts at -π, so the cumulative trapezoid starts from 0 there
        let nv = 64;
        let h = g.spacing(2);
        let mut worst = 0.0f64;
        for col in 0..64 {
            let v = &f.values()[col * nv..(col + 1) * nv];
            let mut acc = 0.0;
            for j in 0..nv {
                if j > 0 {
                    acc += 0.5 * h * (v[j - 1] + v[j]);
                }
                worst = worst.max((acc - a.values()[col * nv + j]).abs());
            }
        }
        let scale = f.max_abs();
        assert!(worst < 5.0 * h * h * scale, "{worst}");
        // value at x3 = -π is zero
        for col in 0..64 {
            assert!(a.values()[col * nv].abs() < 1e-13);
        }
    }

    #[test]
    fn d3_inverts_antiderivative_on_mean_free() {
        let g = grid();
        let f = fluctuation_spectral(&band_limited(&g, 5, None));
        let back = antiderivative_fluct_spectral(&f).derivative(2, 1);
        assert!(back.sub(&f).max_abs() < 1e-14);
    }

    #[test]
    fn functionals_zero_and_constant() {
        let g = grid();
        let z = SpectralField::zeros(&g);
        let r = trajectory_functionals(&[(0.0, vec![z.clone()]), (1.0, vec![z])], 1.0).unwrap();
        assert_eq!(r.x_value, 0.0);
        let c = PhysicalField::from_fn(&g, |_| 2.0).forward();
        let r = trajectory_functionals(&[(0.0, vec![c.clone()]), (0.5, vec![c])], 2.0).unwrap();
        assert!((r.x_value - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!(trajectory_functionals(&[], 1.0).is_err());
    }

    #[test]
    fn functionals_decaying_mode() {
        let g = grid();
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let samples: Vec<_> = ts
            .iter()
            .map(|&t| {
                let f = PhysicalField::from_fn(&g, |x| (-t).exp() * x[0].cos()).forward();
                (t, vec![f])
            })
            .collect();
        let r = trajectory_functionals(&samples, 1.0).unwrap();
        // ‖cos x1‖ = ‖sin x1‖ = 2π in L∞_H L¹; sup t^{1/2}e^{-t} at t = 1/2
        let expect = 2.0 * PI * (1.0 + (0.5f64).sqrt() * (-0.5f64).exp());
        assert!((r.x_value - expect).abs() < 1e-12, "{} vs {}", r.x_value, expect);
    }
}
