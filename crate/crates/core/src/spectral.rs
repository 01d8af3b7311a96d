//! Periodic grids on `[-π, π)^d`, discrete Fourier transforms, spectral
//! differentiation and 2/3-rule dealiasing.
//!
//! Coefficients are the true Fourier coefficients of the 2π-periodic
//! function: the forward transform carries the `1/N` factor and the
//! inverse carries none, so multiplier symbols apply verbatim.
//!
//! Storage is row-major with the last axis fastest. On a 3D grid the
//! axes are `(x1, x2, x3)` with `x3` vertical and contiguous in memory.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest accepted number of points per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum AxisRole {
    Horizontal,
    Vertical,
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct GridInner {
    dims: Vec<usize>,
    roles: Vec<AxisRole>,
    plans: Vec<AxisPlan>,
}

/// A uniform periodic grid with one role per axis.
///
/// Cloning is cheap; FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dims == other.inner.dims && self.inner.roles == other.inner.roles)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dims", &self.inner.dims)
            .field("roles", &self.inner.roles)
            .finish()
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_POINTS || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "axis size {n} must be even and at least {MIN_POINTS}"
        )));
    }
    Ok(())
}

impl Grid {
    pub fn new(dims: &[usize], roles: &[AxisRole]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 || dims.len() != roles.len() {
            return Err(Error::InvalidGrid(format!(
                "need 1..=3 axes with one role each, got {} dims and {} roles",
                dims.len(),
                roles.len()
            )));
        }
        for &n in dims {
            check_size(n)?;
        }
        let mut planner = FftPlanner::new();
        let plans = dims
            .iter()
            .map(|&n| AxisPlan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                dims: dims.to_vec(),
                roles: roles.to_vec(),
                plans,
            }),
        })
    }

    /// 3D grid: `x1`, `x2` horizontal with `n_h` points, `x3` vertical with `n_v`.
    pub fn new_3d(n_h: usize, n_v: usize) -> Result<Self> {
        Self::new(
            &[n_h, n_h, n_v],
            &[AxisRole::Horizontal, AxisRole::Horizontal, AxisRole::Vertical],
        )
    }

    /// 2D horizontal grid (T²).
    pub fn new_2d(n: usize) -> Result<Self> {
        Self::new(&[n, n], &[AxisRole::Horizontal, AxisRole::Horizontal])
    }

    /// 1D grid (T¹), tagged vertical.
    pub fn new_1d(n: usize) -> Result<Self> {
        Self::new(&[n], &[AxisRole::Vertical])
    }

    pub fn ndim(&self) -> usize {
        self.inner.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.inner.dims
    }

    pub fn roles(&self) -> &[AxisRole] {
        &self.inner.roles
    }

    pub fn len(&self) -> usize {
        self.inner.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.inner.dims[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.ndim()).map(|a| self.spacing(a)).product()
    }

    /// Index of the vertical axis, if any.
    pub fn vertical_axis(&self) -> Option<usize> {
        self.inner.roles.iter().position(|r| *r == AxisRole::Vertical)
    }

    pub fn horizontal_axes(&self) -> Vec<usize> {
        (0..self.ndim())
            .filter(|&a| self.inner.roles[a] == AxisRole::Horizontal)
            .collect()
    }

    /// True for the standard 3D layout `(H, H, V)`.
    pub fn is_layered(&self) -> bool {
        self.ndim() == 3
            && self.inner.roles
                == [AxisRole::Horizontal, AxisRole::Horizontal, AxisRole::Vertical]
    }

    /// Signed wavenumber stored at `index` along an axis: `{-n/2+1, ..., n/2}`.
    pub fn wavenumber(&self, axis: usize, index: usize) -> i64 {
        let n = self.inner.dims[axis];
        if index <= n / 2 {
            index as i64
        } else {
            index as i64 - n as i64
        }
    }

    pub fn wavenumbers(&self, axis: usize) -> Vec<i64> {
        (0..self.inner.dims[axis])
            .map(|i| self.wavenumber(axis, i))
            .collect()
    }

    pub fn is_nyquist(&self, axis: usize, index: usize) -> bool {
        index == self.inner.dims[axis] / 2
    }

    /// Grid coordinates `x_j = -π + j·h` along an axis.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.inner.dims[axis])
            .map(|j| -PI + j as f64 * h)
            .collect()
    }

    /// Dealias cutoff per axis: modes with `|k| > floor(n/3)` are removed.
    pub fn dealias_cutoff(&self, axis: usize) -> i64 {
        (self.inner.dims[axis] / 3) as i64
    }

    /// Per-axis multi-index of a flat offset, padded with zeros to 3 entries.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.ndim()).rev() {
            let n = self.inner.dims[a];
            out[a] = flat % n;
            flat /= n;
        }
        out
    }

    /// Signed wavenumbers of a flat offset, padded with zeros.
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        let idx = self.unflatten(flat);
        let mut k = [0i64; 3];
        for a in 0..self.ndim() {
            k[a] = self.wavenumber(a, idx[a]);
        }
        k
    }

    /// True when any axis of the flat offset sits on its Nyquist index.
    pub fn touches_nyquist(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        (0..self.ndim()).any(|a| self.is_nyquist(a, idx[a]))
    }

    /// Horizontal T² grid matching the horizontal axes of a layered grid.
    pub fn horizontal_grid(&self) -> Result<Grid> {
        if !self.is_layered() {
            return Err(Error::InvalidGrid("horizontal_grid needs a 3D layered grid".into()));
        }
        let d = self.dims();
        Grid::new(&[d[0], d[1]], &[AxisRole::Horizontal, AxisRole::Horizontal])
    }

    /// Points per horizontal column and number of columns for a layered grid.
    pub(crate) fn column_shape(&self) -> (usize, usize) {
        let d = self.dims();
        (d[0] * d[1], d[2])
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let dims = self.dims();
        let n = dims[axis];
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let plan = if forward {
            &self.inner.plans[axis].forward
        } else {
            &self.inner.plans[axis].inverse
        };
        if inner == 1 {
            plan.process(data);
            return;
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n * inner * outer];
        // gather lines so that each length-n line is contiguous
        for o in 0..outer {
            for j in 0..n {
                let src = (o * n + j) * inner;
                for i in 0..inner {
                    buf[(o * inner + i) * n + j] = data[src + i];
                }
            }
        }
        plan.process(&mut buf);
        for o in 0..outer {
            for j in 0..n {
                let dst = (o * n + j) * inner;
                for i in 0..inner {
                    data[dst + i] = buf[(o * inner + i) * n + j];
                }
            }
        }
    }

    /// `(-1)^(k1+k2+k3)`: phase shift between `[0, 2π)` DFT bins and the
    /// `[-π, π)` grid origin.
    fn origin_sign(&self, flat: usize) -> f64 {
        let k = self.mode(flat);
        if (k[0] + k[1] + k[2]).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Real samples of a scalar on a grid.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients of a scalar on a grid.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl PhysicalField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at offset {pos}")));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x)` at every grid point; unused coordinates are 0.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let coords: Vec<Vec<f64>> = (0..grid.ndim()).map(|a| grid.coords(a)).collect();
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                let mut x = [0.0; 3];
                for a in 0..grid.ndim() {
                    x[a] = coords[a][idx[a]];
                }
                f(x)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_values_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Grid sum times cell volume: the periodic trapezoid rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn forward(&self) -> SpectralField {
        forward(self)
    }
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed wavenumbers `k` (extra entries ignored).
    pub fn coeff_at(&self, k: [i64; 3]) -> Complex64 {
        self.coeffs[self.offset_of(k)]
    }

    pub fn set_coeff(&mut self, k: [i64; 3], value: Complex64) {
        let off = self.offset_of(k);
        self.coeffs[off] = value;
    }

    fn offset_of(&self, k: [i64; 3]) -> usize {
        let dims = self.grid.dims();
        let mut flat = 0usize;
        for (a, &n) in dims.iter().enumerate() {
            let idx = k[a].rem_euclid(n as i64) as usize;
            flat = flat * n + idx;
        }
        flat
    }

    pub fn inverse(&self) -> PhysicalField {
        inverse(self)
    }

    /// Multiplies every coefficient by `symbol(k)`.
    pub fn apply_symbol(&self, symbol: impl Fn([i64; 3]) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, c)| c * symbol(self.grid.mode(flat)))
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Real-valued symbol; the Nyquist entries are left to the caller.
    pub fn apply_real_symbol(&self, symbol: impl Fn([i64; 3]) -> f64) -> Self {
        self.apply_symbol(|k| Complex64::new(symbol(k), 0.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(self.grid == other.grid);
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert!(self.grid == other.grid);
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        debug_assert!(self.grid == other.grid);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `Σ |c_k|²`
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|c(-k) - conj(c(k))|`; zero for real fields.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for flat in 0..self.coeffs.len() {
            let k = self.grid.mode(flat);
            let mirror = self.coeff_at([-k[0], -k[1], -k[2]]);
            worst = worst.max((mirror - self.coeffs[flat].conj()).norm());
        }
        worst
    }

    /// Spectral derivative of the given order along one axis.
    pub fn derivative(&self, axis: usize, order: u32) -> Self {
        derivative(self, axis, order)
    }

    pub fn dealias(&self) -> Self {
        dealias(self)
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!(
            "grid {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

pub fn forward(f: &PhysicalField) -> SpectralField {
    let grid = &f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in 0..grid.ndim() {
        grid.transform_axis(&mut data, axis, true);
    }
    let norm = 1.0 / grid.len() as f64;
    for (flat, c) in data.iter_mut().enumerate() {
        *c *= norm * grid.origin_sign(flat);
    }
    SpectralField {
        grid: grid.clone(),
        coeffs: data,
    }
}

/// Inverse transform; the imaginary part (round-off for real fields) is dropped.
pub fn inverse(f: &SpectralField) -> PhysicalField {
    let grid = &f.grid;
    let mut data: Vec<Complex64> = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(flat, c)| c * grid.origin_sign(flat))
        .collect();
    for axis in 0..grid.ndim() {
        grid.transform_axis(&mut data, axis, false);
    }
    PhysicalField {
        grid: grid.clone(),
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

/// Multiplies the coefficient at `k` by `(i k_axis)^order`. Odd orders zero
/// the Nyquist plane of that axis.
pub fn derivative(f: &SpectralField, axis: usize, order: u32) -> SpectralField {
    let grid = &f.grid;
    let n = grid.dims()[axis];
    let mut out = f.clone();
    let factors: Vec<Complex64> = (0..n)
        .map(|idx| {
            if order % 2 == 1 && grid.is_nyquist(axis, idx) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavenumber(axis, idx) as f64).powu(order)
            }
        })
        .collect();
    for (flat, c) in out.coeffs.iter_mut().enumerate() {
        *c *= factors[grid.unflatten(flat)[axis]];
    }
    out
}

/// 2/3 rule: zero every mode with `|k_axis| > floor(n_axis/3)` on some axis.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = &f.grid;
    let mut out = f.clone();
    let cut: Vec<i64> = (0..grid.ndim()).map(|a| grid.dealias_cutoff(a)).collect();
    for (flat, c) in out.coeffs.iter_mut().enumerate() {
        let k = grid.mode(flat);
        if (0..grid.ndim()).any(|a| k[a].abs() > cut[a]) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Dealiased product of two band-limited fields given in spectral form.
pub fn product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let pa = inverse(a);
    let pb = inverse(b);
    let prod: Vec<f64> = pa.values.iter().zip(&pb.values).map(|(x, y)| x * y).collect();
    dealias(&forward(&PhysicalField::from_values_unchecked(a.grid(), prod)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_examples() {
        let g = Grid::new_3d(8, 8).unwrap();
        assert_eq!(g.len(), 512);
        for a in 0..3 {
            assert!((g.spacing(a) - PI / 4.0).abs() < 1e-15);
            assert!((g.spacing(a) * 8.0 - 2.0 * PI).abs() < 1e-14);
        }
        let g = Grid::new_3d(16, 8).unwrap();
        let mut kh = g.wavenumbers(0);
        kh.sort();
        assert_eq!(kh, (-7..=8).collect::<Vec<_>>());
        let mut kv = g.wavenumbers(2);
        kv.sort();
        assert_eq!(kv, (-3..=4).collect::<Vec<_>>());
        assert!(Grid::new_3d(6, 8).is_err());
        assert!(Grid::new_3d(9, 8).is_err());
        assert!(Grid::new_3d(8, 10).is_ok());
    }

    #[test]
    fn constant_and_single_mode() {
        let g = Grid::new_3d(8, 8).unwrap();
        let one = PhysicalField::from_fn(&g, |_| 1.0).forward();
        for (flat, c) in one.coeffs().iter().enumerate() {
            let k = g.mode(flat);
            if k == [0, 0, 0] {
                assert!((c.re - 1.0).abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14);
            }
        }
        let cos = PhysicalField::from_fn(&g, |x| x[0].cos()).forward();
        for (flat, c) in cos.coeffs().iter().enumerate() {
            let k = g.mode(flat);
            if k == [1, 0, 0] || k == [-1, 0, 0] {
                assert!((c.re - 0.5).abs() < 1e-14 && c.im.abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14, "k={k:?} c={c}");
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let g = Grid::new_3d(16, 16).unwrap();
        let d = PhysicalField::from_fn(&g, |x| x[0].sin())
            .forward()
            .derivative(0, 1)
            .inverse();
        let expect = PhysicalField::from_fn(&g, |x| x[0].cos());
        let err = d.zip_with(&expect, |a, b| a - b).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");

        let d2 = PhysicalField::from_fn(&g, |x| (2.0 * x[2]).cos())
            .forward()
            .derivative(2, 2)
            .inverse();
        let expect = PhysicalField::from_fn(&g, |x| -4.0 * (2.0 * x[2]).cos());
        let err = d2.zip_with(&expect, |a, b| a - b).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn odd_derivative_kills_nyquist() {
        let g = Grid::new_1d(8).unwrap();
        // alternating signs: pure Nyquist content
        let f = PhysicalField::from_fn(&g, |x| (4.0 * x[0]).cos());
        let d = f.forward().derivative(0, 1);
        assert!(d.max_abs() < 1e-15);
        let d2 = f.forward().derivative(0, 2).inverse();
        let expect = f.map(|v| -16.0 * v);
        assert!(d2.zip_with(&expect, |a, b| a - b).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn dealias_cutoff_n12() {
        let g = Grid::new_1d(12).unwrap();
        let mut f = SpectralField::zeros(&g);
        for k in -5..=6 {
            f.set_coeff([k, 0, 0], Complex64::new(1.0, 0.0));
        }
        let d = f.dealias();
        for k in -5i64..=6 {
            let c = d.coeff_at([k, 0, 0]);
            if k.abs() >= 5 {
                assert_eq!(c, Complex64::new(0.0, 0.0));
            } else {
                assert_eq!(c, Complex64::new(1.0, 0.0));
            }
        }
        let dd = d.dealias();
        assert_eq!(dd.coeffs(), d.coeffs());
    }

    #[test]
    fn dealiased_product_has_no_alias_at_k2() {
        let g = Grid::new_1d(8).unwrap();
        let f = PhysicalField::from_fn(&g, |x| (3.0 * x[0]).cos()).forward();
        // exact cos²(3x) = 1/2 + cos(6x)/2 has no k=±2 content
        let p = product(&f.dealias(), &f.dealias());
        assert!(p.coeff_at([2, 0, 0]).norm() < 1e-15);
        assert!(p.coeff_at([-2, 0, 0]).norm() < 1e-15);
        // the raw grid product aliases k=6 onto k=-2
        let raw = forward(&inverse(&f).zip_with(&inverse(&f), |a, b| a * b).unwrap());
        assert!((raw.coeff_at([2, 0, 0]).re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = Grid::new_3d(8, 8).unwrap();
        assert!(PhysicalField::new(&g, vec![0.0; 10]).is_err());
        assert!(PhysicalField::new(&g, vec![f64::NAN; 512]).is_err());
        let h = Grid::new_3d(8, 10).unwrap();
        let a = PhysicalField::zeros(&g);
        let b = PhysicalField::zeros(&h);
        assert!(a.zip_with(&b, |x, y| x + y).is_err());
    }
}
