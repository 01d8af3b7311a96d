//! Heat semigroups, periodic heat kernels, the anisotropic Helmholtz
//! projection `P_ε` and `div_ε`.
//!
//! Every operator here is a Fourier multiplier. Kernels are 2π-periodic:
//! the Gaussian is periodized over shifts `2πk`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, PhysicalField, SpectralField};

/// Three spectral components of a vector field on a layered grid.
pub type SpectralVec3 = [SpectralField; 3];

/// Relative size of the dropped tail in kernel sums.
pub const KERNEL_TAIL: f64 = 1e-14;

fn check_time(t: f64, what: &str) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("{what}={t} must be >= 0")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon={eps} must lie in (0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub t: f64,
    pub d: usize,
    /// Fractional order carried by [`fractional_kernel_l1`]; 0 for `K_t`.
    pub s: f64,
    /// Shifts `2πk` with `|k| <= truncation_radius` per axis.
    pub truncation_radius: usize,
}

impl KernelSpec {
    pub fn new(t: f64, d: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("kernel time t={t} must be > 0")));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("dimension {d} not in 1..=3")));
        }
        Ok(Self {
            t,
            d,
            s: 0.0,
            truncation_radius: lattice_radius(t),
        })
    }
}

/// Smallest `m` with `exp(−(2πm − π)²/(4t)) < KERNEL_TAIL`.
fn lattice_radius(t: f64) -> usize {
    let reach = (4.0 * t * (1.0 / KERNEL_TAIL).ln()).sqrt();
    ((reach + PI) / (2.0 * PI)).ceil() as usize + 1
}

fn gaussian(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// `Σ_k g_t(x − 2πk)` and its first two `x`-derivatives, for `|k| <= m`.
fn periodized(t: f64, x: f64, m: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    let m = m as i64;
    for k in -m..=m {
        let y = x - 2.0 * PI * k as f64;
        let g = gaussian(t, y);
        out[0] += g;
        out[1] += -y / (2.0 * t) * g;
        out[2] += (y * y / (4.0 * t * t) - 1.0 / (2.0 * t)) * g;
    }
    out
}

/// `(1/2π) Σ_k e^{−tk²} e^{ikx}` and its first two derivatives.
fn spectral_sum(t: f64, x: f64) -> [f64; 3] {
    let kmax = ((1.0 / KERNEL_TAIL).ln() / t).sqrt().ceil() as i64 + 1;
    let mut out = [1.0 / (2.0 * PI), 0.0, 0.0];
    for k in 1..=kmax {
        let kf = k as f64;
        let w = (-t * kf * kf).exp() / PI;
        out[0] += w * (kf * x).cos();
        out[1] -= w * kf * (kf * x).sin();
        out[2] -= w * kf * kf * (kf * x).cos();
    }
    out
}

/// One-dimensional periodic heat kernel `K_t(x)` and derivatives.
///
/// The Gaussian lattice sum is used for `t < 1` and the Fourier series
/// otherwise; both converge fast in their range.
pub fn kernel_1d(t: f64, x: f64) -> [f64; 3] {
    if t < 1.0 {
        periodized(t, x, lattice_radius(t))
    } else {
        spectral_sum(t, x)
    }
}

/// Lattice-sum evaluation of `K_t` at the given points (first `d` coordinates).
pub fn heat_kernel_values(spec: &KernelSpec, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    if !(spec.t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel time t={} must be > 0", spec.t)));
    }
    Ok(points
        .iter()
        .map(|p| {
            (0..spec.d)
                .map(|a| periodized(spec.t, p[a], spec.truncation_radius)[0])
                .product()
        })
        .collect())
}

/// Fourier-series evaluation of `K_t`; the Poisson-summation partner of
/// [`heat_kernel_values`].
pub fn heat_kernel_spectral(t: f64, d: usize, points: &[[f64; 3]]) -> Vec<f64> {
    points
        .iter()
        .map(|p| (0..d).map(|a| spectral_sum(t, p[a])[0]).product())
        .collect()
}

/// `‖K_t‖_{L¹(T^d)}` by the periodic trapezoid rule on `n` points per axis.
///
/// `K_t > 0` and `K_t` is a product of one-dimensional kernels, so the
/// d-dimensional norm is the d-th power of the one-dimensional one.
pub fn heat_kernel_l1(t: f64, d: usize, n: usize) -> Result<f64> {
    let spec = KernelSpec::new(t, d)?;
    let h = 2.0 * PI / n as f64;
    let pts: Vec<[f64; 3]> = (0..n).map(|j| [-PI + j as f64 * h, 0.0, 0.0]).collect();
    let one = KernelSpec { d: 1, ..spec };
    let vals = heat_kernel_values(&one, &pts)?;
    let l1: f64 = vals.iter().map(|v| v.abs()).sum::<f64>() * h;
    Ok(l1.powi(d as i32))
}

/// `‖∂_x K_t‖_{L¹(T)} = 2 (K_t(0) − K_t(π))`.
pub fn kernel_d1_l1(t: f64) -> f64 {
    2.0 * (kernel_1d(t, 0.0)[0] - kernel_1d(t, PI)[0])
}

/// `‖∂_x² K_t‖_{L¹(T)} = −4 ∂_x K_t(x₀)`, `x₀` the zero of `∂_x² K_t` in `(0, π)`.
pub fn kernel_d2_l1(t: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, PI);
    // ∂²K < 0 at 0 and > 0 at π
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kernel_1d(t, mid)[2] < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    -4.0 * kernel_1d(t, 0.5 * (lo + hi))[1]
}

fn heat_factor(k: [i64; 3], th: f64, tv: f64) -> f64 {
    let kh = (k[0] * k[0] + k[1] * k[1]) as f64;
    let kv = (k[2] * k[2]) as f64;
    (-th * kh - tv * kv).exp()
}

/// `e^{tΔ}`: coefficient at `k` times `e^{−t|k|²}`.
pub fn apply_heat(f: &SpectralField, t: f64) -> Result<SpectralField> {
    check_time(t, "t")?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_real_symbol(|k| {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        (-t * k2).exp()
    }))
}

/// `e^{t1 Δ_H} e^{t2 ∂3²}` on a layered grid.
pub fn apply_split_heat(f: &SpectralField, t1: f64, t2: f64) -> Result<SpectralField> {
    check_time(t1, "t1")?;
    check_time(t2, "t2")?;
    Ok(f.apply_real_symbol(|k| heat_factor(k, t1, t2)))
}

/// `(−Δ_H)^{s1/2} |∂3|^{s2} e^{t1 Δ_H} e^{t2 ∂3²}`.
pub fn apply_fractional(
    f: &SpectralField,
    s1: f64,
    s2: f64,
    t1: f64,
    t2: f64,
) -> Result<SpectralField> {
    for (name, s) in [("s1", s1), ("s2", s2)] {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("{name}={s} must lie in [0, 1)")));
        }
    }
    check_time(t1, "t1")?;
    check_time(t2, "t2")?;
    Ok(f.apply_real_symbol(|k| {
        let kh = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let kv = k[2].abs() as f64;
        frac_pow(kh, s1) * frac_pow(kv, s2) * heat_factor(k, t1, t2)
    }))
}

fn frac_pow(x: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        x.powf(s)
    }
}

/// `‖M_t‖_{L¹(T)}` for the one-dimensional multiplier `|k|^s e^{−tk²}`,
/// by trapezoid quadrature of the kernel sampled on `n` points.
pub fn fractional_kernel_l1(s: f64, t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t={t} must be > 0")));
    }
    let g = Grid::new_1d(n)?;
    let mut m = SpectralField::zeros(&g);
    for (flat, c) in m.coeffs_mut().iter_mut().enumerate() {
        let k = g.wavenumber(0, flat);
        let kf = k.abs() as f64;
        *c = Complex64::new(frac_pow(kf, s) * (-t * kf * kf).exp() / (2.0 * PI), 0.0);
    }
    let kernel = m.inverse();
    Ok(kernel.values().iter().map(|v| v.abs()).sum::<f64>() * g.spacing(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub epsilon: f64,
    /// Pass the `k = 0` mode through unchanged.
    pub identity_on_mean: bool,
}

impl ProjectionSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        Ok(Self {
            epsilon,
            identity_on_mean: true,
        })
    }
}

/// Per-mode symbol `I − ξ_ε ξ_εᵀ / |ξ_ε|²`, `ξ_ε = (k1, k2, k3/ε)`.
pub fn projection_symbol(k: [i64; 3], eps: f64) -> [[f64; 3]; 3] {
    let xi = [k[0] as f64, k[1] as f64, k[2] as f64 / eps];
    let n2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        m[i][i] = 1.0;
        if n2 > 0.0 {
            for j in 0..3 {
                m[i][j] -= xi[i] * xi[j] / n2;
            }
        }
    }
    m
}

fn check_vec3(f: &SpectralVec3) -> Result<&Grid> {
    let g = f[0].grid();
    if !g.is_layered() || f[1].grid() != g || f[2].grid() != g {
        return Err(Error::ShapeMismatch(
            "vector components must share one layered grid".into(),
        ));
    }
    Ok(g)
}

/// Applies a per-mode 3×3 complex multiplier; modes touching a Nyquist
/// plane are zeroed.
fn apply_matrix(
    f: &SpectralVec3,
    symbol: impl Fn([i64; 3]) -> [[Complex64; 3]; 3],
) -> Result<SpectralVec3> {
    let g = check_vec3(f)?.clone();
    let mut out = [
        SpectralField::zeros(&g),
        SpectralField::zeros(&g),
        SpectralField::zeros(&g),
    ];
    for flat in 0..g.len() {
        if g.touches_nyquist(flat) {
            continue;
        }
        let k = g.mode(flat);
        let m = symbol(k);
        let x = [f[0].coeffs()[flat], f[1].coeffs()[flat], f[2].coeffs()[flat]];
        for i in 0..3 {
            out[i].coeffs_mut()[flat] = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2];
        }
    }
    Ok(out)
}

fn real_matrix(m: [[f64; 3]; 3], scale: Complex64) -> [[Complex64; 3]; 3] {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = scale * m[i][j];
        }
    }
    out
}

/// `P_ε F`.
pub fn apply_projection_eps(f: &SpectralVec3, spec: &ProjectionSpec) -> Result<SpectralVec3> {
    check_eps(spec.epsilon)?;
    let eps = spec.epsilon;
    let keep_mean = spec.identity_on_mean;
    apply_matrix(f, |k| {
        if k == [0, 0, 0] && !keep_mean {
            return [[Complex64::new(0.0, 0.0); 3]; 3];
        }
        real_matrix(projection_symbol(k, eps), Complex64::new(1.0, 0.0))
    })
}

/// `div_ε F = ∂1 F1 + ∂2 F2 + ∂3 F3 / ε`.
pub fn div_eps(f: &SpectralVec3, eps: f64) -> Result<SpectralField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon={eps} must be > 0")));
    }
    check_vec3(f)?;
    let mut out = f[0].derivative(0, 1);
    out.axpy(1.0, &f[1].derivative(1, 1));
    out.axpy(1.0 / eps, &f[2].derivative(2, 1));
    Ok(out)
}

/// Derivative factor of a fused heat–projection multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Deriv {
    None,
    D1,
    D2,
    D3,
    /// `(−Δ_H)^{s/2}`
    FracH(f64),
    /// `|∂3|^s`
    FracV(f64),
}

impl Deriv {
    pub fn symbol(&self, k: [i64; 3]) -> Complex64 {
        match *self {
            Deriv::None => Complex64::new(1.0, 0.0),
            Deriv::D1 => Complex64::new(0.0, k[0] as f64),
            Deriv::D2 => Complex64::new(0.0, k[1] as f64),
            Deriv::D3 => Complex64::new(0.0, k[2] as f64),
            Deriv::FracH(s) => {
                Complex64::new(frac_pow(((k[0] * k[0] + k[1] * k[1]) as f64).sqrt(), s), 0.0)
            }
            Deriv::FracV(s) => Complex64::new(frac_pow(k[2].abs() as f64, s), 0.0),
        }
    }
}

/// `e^{tΔ} P_ε ∂ F` in one multiplier pass.
pub fn composite_heat_proj(
    f: &SpectralVec3,
    t: f64,
    eps: f64,
    deriv: Deriv,
) -> Result<SpectralVec3> {
    check_time(t, "t")?;
    check_eps(eps)?;
    apply_matrix(f, |k| {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let scale = deriv.symbol(k) * (-t * k2).exp();
        real_matrix(projection_symbol(k, eps), scale)
    })
}

/// Applies a scalar operator to each component.
pub fn map3(f: &SpectralVec3, op: impl Fn(&SpectralField) -> SpectralField) -> SpectralVec3 {
    [op(&f[0]), op(&f[1]), op(&f[2])]
}

/// Physical-space periodic convolution `K_t * f` on a layered or lower
/// dimensional grid, by direct summation with lattice-sum kernel values.
/// Quadratic cost; meant as a check of [`apply_heat`] on small grids.
pub fn heat_by_convolution(f: &PhysicalField, t: f64) -> Result<PhysicalField> {
    let g = f.grid();
    let d = g.ndim();
    let spec = KernelSpec::new(t, 1)?;
    // separable kernel: one table per axis of K_t(x_i − y_j) · h
    let tables: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let n = g.dims()[a];
            let h = g.spacing(a);
            (0..n)
                .map(|shift| {
                    let x = shift as f64 * h;
                    periodized(t, x, spec.truncation_radius)[0] * h
                })
                .collect()
        })
        .collect();
    let mut data = f.values().to_vec();
    // apply the 1D convolution along each axis in turn
    for a in 0..d {
        let dims = g.dims();
        let n = dims[a];
        let inner: usize = dims[a + 1..].iter().product();
        let outer: usize = dims[..a].iter().product();
        let mut out = vec![0.0; data.len()];
        for o in 0..outer {
            for i in 0..inner {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let shift = (j + n - l) % n;
                        acc += tables[a][shift] * data[(o * n + l) * inner + i];
                    }
                    out[(o * n + j) * inner + i] = acc;
                }
            }
        }
        data = out;
    }
    PhysicalField::new(g, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{band_limited, band_limited_vector};

    #[test]
    fn kernel_large_time_is_uniform() {
        let spec = KernelSpec::new(100.0, 1).unwrap();
        let pts: Vec<[f64; 3]> = (0..17).map(|j| [-PI + j as f64 * PI / 8.0, 0.0, 0.0]).collect();
        for v in heat_kernel_values(&spec, &pts).unwrap() {
            assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-10);
        }
        assert!(KernelSpec::new(0.0, 1).is_err());
        assert!(KernelSpec::new(-1.0, 1).is_err());
    }

    #[test]
    fn lattice_matches_spectral_sum() {
        let spec = KernelSpec::new(0.1, 1).unwrap();
        let lattice = heat_kernel_values(&spec, &[[0.0; 3]]).unwrap()[0];
        let oracle: f64 = (-200i64..=200)
            .map(|k| (-(k * k) as f64 * 0.1).exp())
            .sum::<f64>()
            / (2.0 * PI);
        assert!((lattice - oracle).abs() < 1e-13 * oracle);
        for &t in &[0.01, 0.3, 2.0] {
            for j in 0..9 {
                let x = -PI + j as f64 * 0.7;
                let a = periodized(t, x, lattice_radius(t));
                let b = spectral_sum(t, x);
                for i in 0..3 {
                    assert!((a[i] - b[i]).abs() < 1e-10 * (1.0 + b[i].abs()), "t={t} i={i}");
                }
            }
        }
    }

    #[test]
    fn kernel_unit_mass() {
        for &t in &[0.01, 0.1, 1.0] {
            for d in 1..=3 {
                let l1 = heat_kernel_l1(t, d, 512).unwrap();
                assert!((l1 - 1.0).abs() < 1e-12, "t={t} d={d} l1={l1}");
            }
        }
    }

    #[test]
    fn derivative_kernel_norms_match_quadrature() {
        for &t in &[1e-3, 0.05, 0.7, 3.0] {
            let n = 20000;
            let h = 2.0 * PI / n as f64;
            let (mut q1, mut q2) = (0.0, 0.0);
            for j in 0..n {
                let k = kernel_1d(t, -PI + (j as f64 + 0.5) * h);
                q1 += k[1].abs() * h;
                q2 += k[2].abs() * h;
            }
            assert!((kernel_d1_l1(t) - q1).abs() < 1e-5 * q1, "t={t}");
            assert!((kernel_d2_l1(t) - q2).abs() < 1e-4 * q2, "t={t}");
        }
    }

    #[test]
    fn heat_examples() {
        let g = Grid::new_3d(8, 8).unwrap();
        let c = PhysicalField::from_fn(&g, |_| 2.0).forward();
        assert!(apply_heat(&c, 3.0).unwrap().sub(&c).max_abs() < 1e-15);
        let f = PhysicalField::from_fn(&g, |x| x[0].cos()).forward();
        let e = PhysicalField::from_fn(&g, |x| (-1f64).exp() * x[0].cos()).forward();
        assert!(apply_heat(&f, 1.0).unwrap().sub(&e).max_abs() < 1e-15);
        assert!(apply_heat(&f, -1.0).is_err());
        let r = band_limited(&g, 3, None);
        assert_eq!(apply_heat(&r, 0.0).unwrap().coeffs(), r.coeffs());
        let a = apply_split_heat(&r, 0.2, 0.2).unwrap();
        let b = apply_heat(&r, 0.2).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-15);
    }

    #[test]
    fn heat_vs_convolution() {
        // the grid convolution equals the multiplier only once the kernel
        // is resolved: e^{-t (n - k_max)^2} must be below round-off
        let g = Grid::new_3d(24, 24).unwrap();
        let r = band_limited(&g, 9, None);
        for &t in &[0.2, 1.0] {
            let spectral = apply_heat(&r, t).unwrap().inverse();
            let conv = heat_by_convolution(&r.inverse(), t).unwrap();
            let err = spectral.zip_with(&conv, |a, b| a - b).unwrap().max_abs();
            assert!(err < 1e-10, "t={t} err={err}");
        }
    }

    #[test]
    fn fractional_examples() {
        let g = Grid::new_3d(8, 8).unwrap();
        let r = band_limited(&g, 4, None);
        let a = apply_fractional(&r, 0.0, 0.0, 0.3, 0.7).unwrap();
        let b = apply_split_heat(&r, 0.3, 0.7).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-16);
        assert!(apply_fractional(&r, 1.0, 0.0, 1.0, 1.0).is_err());
        let f = PhysicalField::from_fn(&g, |x| x[0].cos()).forward();
        let e = f.scale((-1f64).exp());
        let out = apply_fractional(&f, 0.5, 0.0, 1.0, 1.0).unwrap();
        assert!(out.sub(&e).max_abs() < 1e-15);
    }

    #[test]
    fn fractional_kernel_decay_rate() {
        for &s in &[0.25, 0.5, 0.75] {
            // the small-time regime carries the power law; near t = 1 the
            // kernel is a single decaying mode and falls off faster
            let ts = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
            let ls: Vec<f64> = ts
                .iter()
                .map(|&t| fractional_kernel_l1(s, t, 4096).unwrap())
                .collect();
            let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
            let y: Vec<f64> = ls.iter().map(|v| v.ln()).collect();
            let n = x.len() as f64;
            let mx = x.iter().sum::<f64>() / n;
            let my = y.iter().sum::<f64>() / n;
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let slope = sxy / sxx;
            assert!(slope >= -s / 2.0 - 0.05, "s={s} slope={slope}");
            let c = fractional_kernel_l1(s, 1.0, 4096).unwrap();
            assert!(c <= ls[0] * 1e-3f64.powf(s / 2.0) * 2.0);
        }
    }

    #[test]
    fn projection_examples() {
        let g = Grid::new_3d(8, 8).unwrap();
        let phi = crate::spectral::dealias(&band_limited(&g, 2, None));
        let grad = [phi.derivative(0, 1), phi.derivative(1, 1), phi.derivative(2, 1)];
        let p = apply_projection_eps(&grad, &ProjectionSpec::new(1.0).unwrap()).unwrap();
        for c in &p {
            assert!(c.max_abs() < 1e-12);
        }
        // single mode k = (1, 0, 1), ε = 1/2, input e1
        let m = projection_symbol([1, 0, 1], 0.5);
        let col = [m[0][0], m[1][0], m[2][0]];
        let want = [0.8, 0.0, -0.4];
        for i in 0..3 {
            assert!((col[i] - want[i]).abs() < 1e-15);
        }
        // the same through the field path
        let e1 = PhysicalField::from_fn(&g, |x| (x[0] + x[2]).cos()).forward();
        let z = SpectralField::zeros(&g);
        let out = apply_projection_eps(&[e1.clone(), z.clone(), z], &ProjectionSpec::new(0.5).unwrap())
            .unwrap();
        assert!(out[0].sub(&e1.scale(0.8)).max_abs() < 1e-15);
        assert!(out[2].sub(&e1.scale(-0.4)).max_abs() < 1e-15);
        assert!(out[1].max_abs() < 1e-15);
        assert!(ProjectionSpec::new(0.0).is_err());
        assert!(ProjectionSpec::new(1.5).is_err());
    }

    #[test]
    fn projection_properties() {
        let g = Grid::new_3d(12, 12).unwrap();
        let v = band_limited_vector(&g, 17, &[None, None, None]);
        let f: SpectralVec3 = [v[0].clone(), v[1].clone(), v[2].clone()];
        for &eps in &[1.0, 0.3, 0.01] {
            let spec = ProjectionSpec::new(eps).unwrap();
            let p = apply_projection_eps(&f, &spec).unwrap();
            assert!(div_eps(&p, eps).unwrap().inverse().max_abs() < 1e-12);
            let pp = apply_projection_eps(&p, &spec).unwrap();
            for i in 0..3 {
                assert!(pp[i].sub(&p[i]).max_abs() < 1e-13);
            }
        }
        for k in [[1, 2, 3], [0, 0, 5], [4, 0, 0], [-3, 1, -2]] {
            let m = projection_symbol(k, 0.2);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(m[i][j], m[j][i]);
                }
            }
        }
    }

    #[test]
    fn div_eps_examples() {
        let g = Grid::new_3d(8, 8).unwrap();
        let z = SpectralField::zeros(&g);
        let s1 = PhysicalField::from_fn(&g, |x| x[0].sin()).forward();
        let c1 = PhysicalField::from_fn(&g, |x| x[0].cos());
        let d = div_eps(&[s1, z.clone(), z.clone()], 1.0).unwrap().inverse();
        assert!(d.zip_with(&c1, |a, b| a - b).unwrap().max_abs() < 1e-14);
        let s3 = PhysicalField::from_fn(&g, |x| x[2].sin()).forward();
        let c3 = PhysicalField::from_fn(&g, |x| 2.0 * x[2].cos());
        let d = div_eps(&[z.clone(), z, s3], 0.5).unwrap().inverse();
        assert!(d.zip_with(&c3, |a, b| a - b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn fused_equals_composed() {
        let g = Grid::new_3d(12, 8).unwrap();
        let v = band_limited_vector(&g, 5, &[None, None, None]);
        let f: SpectralVec3 = [v[0].clone(), v[1].clone(), v[2].clone()];
        for deriv in [
            Deriv::None,
            Deriv::D1,
            Deriv::D2,
            Deriv::D3,
            Deriv::FracH(0.5),
            Deriv::FracV(0.25),
        ] {
            let eps = 0.1;
            let fused = composite_heat_proj(&f, 0.3, eps, deriv).unwrap();
            let d = map3(&f, |c| c.apply_symbol(|k| deriv.symbol(k)));
            let p = apply_projection_eps(&d, &ProjectionSpec::new(eps).unwrap()).unwrap();
            let composed = map3(&p, |c| apply_heat(c, 0.3).unwrap());
            for i in 0..3 {
                assert!(fused[i].sub(&composed[i]).max_abs() < 1e-12, "{deriv:?}");
            }
        }
        let phi = band_limited(&g, 8, None);
        let grad = [phi.derivative(0, 1), phi.derivative(1, 1), phi.derivative(2, 1)];
        let out = composite_heat_proj(&grad, 0.1, 1.0, Deriv::None).unwrap();
        assert!(out.iter().all(|c| c.max_abs() < 1e-12));
    }
}
