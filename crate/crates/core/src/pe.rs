//! Primitive equations: reconstruction of `w` from `v`, the hydrostatic
//! pressure projection, the exponential midpoint integrator, the forcing
//! `F(v, w)` of the `w`-equation and `F̃ = −(F + u·∇w)`.
//!
//! State is held spectrally. Products are formed on the grid and dealiased.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aniso::{antiderivative_fluct_spectral, fluctuation_spectral, vertical_mean_spectral};
use crate::error::{Error, Result};
use crate::random::{band_limited_vector, Parity};
use crate::semigroup::apply_heat;
use crate::spectral::{dealias, forward, inverse, Grid, PhysicalField, SpectralField};

/// Drift allowed in the stored-state invariants before a solve aborts.
pub const INVARIANT_TOL: f64 = 1e-8;

/// Horizontal velocity, two spectral components.
pub type HVel = [SpectralField; 2];

#[derive(Debug, Clone)]
pub struct HydroState {
    pub v: HVel,
    pub w: SpectralField,
    pub time: f64,
}

/// Time-ordered states on a uniform grid in time.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    /// Spacing between stored states.
    pub dt: f64,
    pub meta: SolverMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub dims: Vec<usize>,
    /// Integrator step.
    pub step: f64,
    pub store_every: usize,
    pub invariant_tol: f64,
    /// Largest invariant defect seen over stored states.
    pub max_defect: f64,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Number of steps `n` with `n·dt = t_final`, allowing a few ulps of slack.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final >= dt) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= T, got dt={dt}, T={t_final}"
        )));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 8.0 * f64::EPSILON * t_final {
        return Err(Error::InvalidArgument(format!(
            "dt={dt} does not divide T={t_final}"
        )));
    }
    Ok(n as usize)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn to_spectral(grid: &Grid, values: Vec<f64>) -> SpectralField {
    dealias(&forward(&PhysicalField::from_values_unchecked(grid, values)))
}

/// `div_H v`.
pub fn div_h(v: &HVel) -> SpectralField {
    let mut d = v[0].derivative(0, 1);
    d.axpy(1.0, &v[1].derivative(1, 1));
    d
}

/// Sup of `div_H v̄` on the grid.
pub fn barotropic_divergence(v: &HVel) -> f64 {
    vertical_mean_spectral(&div_h(v)).inverse().max_abs()
}

/// `w = −∫_{-π}^{x3} div_H v dz`.
pub fn reconstruct_w(v: &HVel) -> Result<SpectralField> {
    let d = div_h(v);
    let defect = vertical_mean_spectral(&d).inverse().max_abs();
    let scale = d.inverse().max_abs().max(1.0);
    if defect > 1e-9 * scale {
        return Err(Error::Precondition(format!(
            "div_H of the vertical mean is {defect:e}, so w(π) != 0"
        )));
    }
    Ok(antiderivative_fluct_spectral(&d).scale(-1.0))
}

/// Removes `∇_H π(x')` so that the vertical mean becomes horizontally
/// divergence free. Only `k3 = 0` modes change; those touching a Nyquist
/// plane are zeroed.
pub fn hydrostatic_project(t: &HVel) -> HVel {
    let g = t[0].grid().clone();
    let nv = g.dims()[2];
    let mut out = t.clone();
    for flat in (0..g.len()).step_by(nv) {
        let k = g.mode(flat);
        if g.touches_nyquist(flat) {
            out[0].coeffs_mut()[flat] = zero();
            out[1].coeffs_mut()[flat] = zero();
            continue;
        }
        let kk = (k[0] * k[0] + k[1] * k[1]) as f64;
        if kk == 0.0 {
            continue;
        }
        let a = [t[0].coeffs()[flat], t[1].coeffs()[flat]];
        let dot = a[0] * k[0] as f64 + a[1] * k[1] as f64;
        out[0].coeffs_mut()[flat] = a[0] - dot * (k[0] as f64 / kk);
        out[1].coeffs_mut()[flat] = a[1] - dot * (k[1] as f64 / kk);
    }
    out
}

/// Grid values of `v1, v2, w` and of `∂_i v_j`.
struct Physical {
    u: [Vec<f64>; 3],
    dv: [[Vec<f64>; 3]; 2],
}

fn physical(v: &HVel, w: &SpectralField) -> Physical {
    let p = |f: &SpectralField| inverse(f).into_values();
    Physical {
        u: [p(&v[0]), p(&v[1]), p(w)],
        dv: [
            [p(&v[0].derivative(0, 1)), p(&v[0].derivative(1, 1)), p(&v[0].derivative(2, 1))],
            [p(&v[1].derivative(0, 1)), p(&v[1].derivative(1, 1)), p(&v[1].derivative(2, 1))],
        ],
    }
}

/// Dealiased `v·∇_H v + w ∂3 v`.
pub fn advection(v: &HVel, w: &SpectralField) -> HVel {
    let g = v[0].grid();
    let ph = physical(v, w);
    let comp = |j: usize| {
        let vals = (0..g.len())
            .map(|i| {
                ph.u[0][i] * ph.dv[j][0][i] + ph.u[1][i] * ph.dv[j][1][i] + ph.u[2][i] * ph.dv[j][2][i]
            })
            .collect();
        to_spectral(g, vals)
    };
    [comp(0), comp(1)]
}

/// Projected tendency `−P_h(v·∇_H v + w ∂3 v)`; the Laplacian is left to
/// the integrator.
pub fn pe_rhs(state: &HydroState) -> HVel {
    let n = advection(&state.v, &state.w);
    hydrostatic_project(&[n[0].scale(-1.0), n[1].scale(-1.0)])
}

/// Checks the stored-state invariants; returns the largest defect.
pub fn hydro_defect(state: &HydroState) -> f64 {
    let d = div_h(&state.v);
    let div3 = d.add(&state.w.derivative(2, 1)).inverse().max_abs();
    let bar = vertical_mean_spectral(&d).inverse().max_abs();
    div3.max(bar)
}

fn check_finite(fields: &[&SpectralField], time: f64) -> Result<()> {
    for f in fields {
        if f.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(format!("state at t={time}")));
        }
    }
    Ok(())
}

fn heat2(v: &HVel, t: f64) -> Result<HVel> {
    Ok([apply_heat(&v[0], t)?, apply_heat(&v[1], t)?])
}

fn axpy2(a: &HVel, s: f64, b: &HVel) -> HVel {
    let mut out = a.clone();
    out[0].axpy(s, &b[0]);
    out[1].axpy(s, &b[1]);
    out
}

/// Exponential midpoint step for `∂_t v = Δv + R(v)`:
/// `v* = e^{hΔ/2}(v + (h/2) R(v))`, `v⁺ = e^{hΔ} v + h e^{hΔ/2} R(v*)`.
fn etd2_step(v: &HVel, h: f64, rhs: impl Fn(&HVel) -> Result<HVel>) -> Result<HVel> {
    let r0 = rhs(v)?;
    let mid = heat2(&axpy2(v, 0.5 * h, &r0), 0.5 * h)?;
    let r1 = rhs(&mid)?;
    let full = heat2(v, h)?;
    Ok(axpy2(&full, h, &heat2(&r1, 0.5 * h)?))
}

fn state_from_v(v: HVel, time: f64) -> Result<HydroState> {
    let w = reconstruct_w(&v)?;
    Ok(HydroState { v, w, time })
}

/// Solves the primitive equations on `[0, T]` storing every step.
pub fn solve_pe(v0: &HVel, t_final: f64, dt: f64) -> Result<Trajectory<HydroState>> {
    solve_pe_strided(v0, t_final, dt, 1)
}

/// As [`solve_pe`], storing every `store_every`-th step.
pub fn solve_pe_strided(
    v0: &HVel,
    t_final: f64,
    dt: f64,
    store_every: usize,
) -> Result<Trajectory<HydroState>> {
    let steps = step_count(t_final, dt)?;
    if store_every == 0 || steps % store_every != 0 {
        return Err(Error::InvalidArgument(format!(
            "store_every={store_every} must divide the {steps} steps"
        )));
    }
    let grid = v0[0].grid().clone();
    if !grid.is_layered() || v0[1].grid() != &grid {
        return Err(Error::InvalidGrid("PE state needs a layered grid".into()));
    }
    let rhs = |v: &HVel| -> Result<HVel> {
        let w = reconstruct_w(v)?;
        Ok(pe_rhs(&HydroState {
            v: v.clone(),
            w,
            time: 0.0,
        }))
    };
    let mut states = Vec::with_capacity(steps / store_every + 1);
    let first = state_from_v(v0.clone(), 0.0)?;
    let mut max_defect = hydro_defect(&first);
    states.push(first);
    let mut v = v0.clone();
    for n in 1..=steps {
        v = etd2_step(&v, dt, rhs)?;
        if n % store_every == 0 {
            let t = n as f64 * dt;
            check_finite(&[&v[0], &v[1]], t)?;
            let s = state_from_v(v.clone(), t)?;
            let defect = hydro_defect(&s);
            if defect > INVARIANT_TOL {
                return Err(Error::InvariantDrift {
                    time: t,
                    what: "div u / div_H v̄".into(),
                    value: defect,
                });
            }
            max_defect = max_defect.max(defect);
            states.push(s);
        }
    }
    Ok(Trajectory {
        states,
        dt: dt * store_every as f64,
        meta: SolverMeta {
            dims: grid.dims().to_vec(),
            step: dt,
            store_every,
            invariant_tol: INVARIANT_TOL,
            max_defect,
        },
    })
}

/// `div_H ∂3 v(x', −π)` as an `x3`-constant spectral field.
fn bottom_trace(v: &HVel) -> SpectralField {
    let d3 = div_h(v).derivative(2, 1);
    let g = d3.grid().clone();
    let nv = g.dims()[2];
    let mut out = SpectralField::zeros(&g);
    for base in (0..g.len()).step_by(nv) {
        let mut acc = zero();
        for j in 0..nv {
            let k3 = g.wavenumber(2, j);
            let c = d3.coeffs()[base + j];
            if k3 % 2 == 0 {
                acc += c;
            } else {
                acc -= c;
            }
        }
        out.coeffs_mut()[base] = acc;
    }
    out
}

/// `F(v, w)`: right side of `∂_t w − Δw = F`, from the advection term,
///
/// `F = ∫_{-π}^{x3} div_H N dz − (x3+π)/(2π) ∫_{-π}^{π} div_H N dz + div_H ∂3 v|_{x3=−π}`
/// with `N = v·∇_H v + w ∂3 v`. The first two terms are the periodic
/// antiderivative of the vertical fluctuation of `div_H N`.
pub fn compute_f(state: &HydroState) -> SpectralField {
    let n = advection(&state.v, &state.w);
    antiderivative_fluct_spectral(&div_h(&n)).add(&bottom_trace(&state.v))
}

/// `F(v, w)` from its barotropic/baroclinic expansion, with no vertical
/// derivative except the bottom trace (which vanishes for `v` even in `x3`):
///
/// `div_H A[ṽ·∇_H ṽ + (div_H ṽ) ṽ] + div_H(Ṽ·∇_H v̄ + v̄·∇_H Ṽ + w ṽ)`,
/// `A` the periodic antiderivative of the fluctuation, `Ṽ = ∫_{-π}^{x3} ṽ`.
pub fn compute_f_expanded(state: &HydroState) -> SpectralField {
    let g = state.w.grid().clone();
    let len = g.len();
    let vbar = [
        vertical_mean_spectral(&state.v[0]),
        vertical_mean_spectral(&state.v[1]),
    ];
    let vt = [
        fluctuation_spectral(&state.v[0]),
        fluctuation_spectral(&state.v[1]),
    ];
    let cap = [
        antiderivative_fluct_spectral(&vt[0]),
        antiderivative_fluct_spectral(&vt[1]),
    ];
    let p = |f: &SpectralField| inverse(f).into_values();
    let d = |f: &SpectralField, a: usize| inverse(&f.derivative(a, 1)).into_values();
    let vt_p = [p(&vt[0]), p(&vt[1])];
    let vb_p = [p(&vbar[0]), p(&vbar[1])];
    let cap_p = [p(&cap[0]), p(&cap[1])];
    let w_p = p(&state.w);
    let div_vt = p(&div_h(&vt));
    let mut inner = Vec::with_capacity(2);
    let mut outer = Vec::with_capacity(2);
    for j in 0..2 {
        let dvt = [d(&vt[j], 0), d(&vt[j], 1)];
        let dvb = [d(&vbar[j], 0), d(&vbar[j], 1)];
        let dcap = [d(&cap[j], 0), d(&cap[j], 1)];
        let gj: Vec<f64> = (0..len)
            .map(|i| vt_p[0][i] * dvt[0][i] + vt_p[1][i] * dvt[1][i] + div_vt[i] * vt_p[j][i])
            .collect();
        let hj: Vec<f64> = (0..len)
            .map(|i| {
                cap_p[0][i] * dvb[0][i]
                    + cap_p[1][i] * dvb[1][i]
                    + vb_p[0][i] * dcap[0][i]
                    + vb_p[1][i] * dcap[1][i]
                    + w_p[i] * vt_p[j][i]
            })
            .collect();
        inner.push(antiderivative_fluct_spectral(&to_spectral(&g, gj)));
        outer.push(to_spectral(&g, hj));
    }
    let inner = [inner[0].clone(), inner[1].clone()];
    let outer = [outer[0].clone(), outer[1].clone()];
    div_h(&inner).add(&div_h(&outer)).add(&bottom_trace(&state.v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FTildeForm {
    /// `−(F + u·∇w)` with `F` from the advection term.
    Definition,
    /// `−(F + v·∇_H w + (∫_{-π}^{x3} div_H v dz) div_H v)` with the expanded `F`.
    NoD3,
}

/// `F̃(v, w)`.
pub fn compute_f_tilde(state: &HydroState, form: FTildeForm) -> SpectralField {
    let g = state.w.grid().clone();
    let len = g.len();
    let p = |f: &SpectralField| inverse(f).into_values();
    let v = [p(&state.v[0]), p(&state.v[1])];
    let dw = [p(&state.w.derivative(0, 1)), p(&state.w.derivative(1, 1))];
    let (f, extra) = match form {
        FTildeForm::Definition => {
            let w = p(&state.w);
            let d3w = p(&state.w.derivative(2, 1));
            let vals = (0..len)
                .map(|i| v[0][i] * dw[0][i] + v[1][i] * dw[1][i] + w[i] * d3w[i])
                .collect();
            (compute_f(state), to_spectral(&g, vals))
        }
        FTildeForm::NoD3 => {
            let d = div_h(&state.v);
            let int_d = p(&antiderivative_fluct_spectral(&d));
            let d = p(&d);
            let vals = (0..len)
                .map(|i| v[0][i] * dw[0][i] + v[1][i] * dw[1][i] + int_d[i] * d[i])
                .collect();
            (compute_f_expanded(state), to_spectral(&g, vals))
        }
    };
    f.add(&extra).scale(-1.0)
}

/// Residual of `∂_t w − Δw − F(v, w)` by centered differences at the
/// interior stored times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WResidual {
    pub times: Vec<f64>,
    pub max_residual: Vec<f64>,
    pub l2_residual: Vec<f64>,
    pub max: f64,
    pub l2: f64,
}

pub fn check_w_equation(traj: &Trajectory<HydroState>) -> Result<WResidual> {
    if traj.states.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "w-equation residual needs >= 3 states, got {}",
            traj.states.len()
        )));
    }
    let h = traj.dt;
    let mut out = WResidual {
        times: vec![],
        max_residual: vec![],
        l2_residual: vec![],
        max: 0.0,
        l2: 0.0,
    };
    for win in traj.states.windows(3) {
        let (a, b, c) = (&win[0], &win[1], &win[2]);
        let mut r = c.w.sub(&a.w).scale(0.5 / h);
        let lap = b.w.apply_real_symbol(|k| -((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64));
        r = r.sub(&lap).sub(&compute_f(b));
        let phys = r.inverse();
        let max = phys.max_abs();
        let l2 = phys.values().iter().map(|x| x * x).sum::<f64>().sqrt()
            * phys.grid().cell_volume().sqrt();
        out.times.push(b.time);
        out.max_residual.push(max);
        out.l2_residual.push(l2);
        out.max = out.max.max(max);
        out.l2 = out.l2.max(l2);
    }
    Ok(out)
}

/// `v0 = (sin x1 cos x3 + ½ sin x2, −cos x1 sin x2 cos x3)`, made
/// admissible by the hydrostatic projection.
pub fn default_initial_data(grid: &Grid) -> Result<HVel> {
    if !grid.is_layered() {
        return Err(Error::InvalidGrid("initial data needs a layered grid".into()));
    }
    let v1 = PhysicalField::from_fn(grid, |x| x[0].sin() * x[2].cos() + 0.5 * x[1].sin());
    let v2 = PhysicalField::from_fn(grid, |x| -x[0].cos() * x[1].sin() * x[2].cos());
    Ok(hydrostatic_project(&[v1.forward(), v2.forward()]))
}

/// Random admissible horizontal velocity, even in `x3`, scaled to the
/// given sup norm.
pub fn random_admissible_v(grid: &Grid, seed: u64, amplitude: f64) -> HVel {
    let c = band_limited_vector(grid, seed, &[Some(Parity::Even), Some(Parity::Even)]);
    let v = hydrostatic_project(&[c[0].clone(), c[1].clone()]);
    let m = v[0].inverse().max_abs().max(v[1].inverse().max_abs());
    if m == 0.0 {
        v
    } else {
        [v[0].scale(amplitude / m), v[1].scale(amplitude / m)]
    }
}

/// Builds a state from `v`, reconstructing `w`.
pub fn hydro_state(v: HVel, time: f64) -> Result<HydroState> {
    state_from_v(v, time)
}
