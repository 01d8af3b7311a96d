//! ε-scaled Navier–Stokes equations and the difference to the primitive
//! equations, either by subtracting two solves or by Picard iteration on
//! the Duhamel form of the difference system.
//!
//! The scaled velocity is stored as `ũ = (v_ε, ε w_ε)`; it is `div_ε`-free
//! and evolves under the isotropic heat semigroup.

use serde::{Deserialize, Serialize};

use crate::aniso::{gradient, norm_spectral};
use crate::error::{Error, Result};
use crate::pe::{compute_f_tilde, step_count, FTildeForm, HVel, HydroState, SolverMeta, Trajectory};
use crate::semigroup::{apply_heat, apply_projection_eps, div_eps, ProjectionSpec, SpectralVec3};
use crate::spectral::{dealias, forward, inverse, Grid, PhysicalField, SpectralField};

pub const INVARIANT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ScaledState {
    /// `(v_ε, ε w_ε)`
    pub u: SpectralVec3,
    pub epsilon: f64,
    pub time: f64,
}

impl ScaledState {
    pub fn v(&self) -> HVel {
        [self.u[0].clone(), self.u[1].clone()]
    }

    pub fn w(&self) -> SpectralField {
        self.u[2].scale(1.0 / self.epsilon)
    }
}

/// `V = v_ε − v` and `εW = ε(w_ε − w)`.
#[derive(Debug, Clone)]
pub struct DifferenceState {
    pub v: HVel,
    pub ew: SpectralField,
    pub epsilon: f64,
    pub time: f64,
}

impl DifferenceState {
    pub fn as_vec3(&self) -> SpectralVec3 {
        [self.v[0].clone(), self.v[1].clone(), self.ew.clone()]
    }

    pub fn zero(grid: &Grid, epsilon: f64, time: f64) -> Self {
        Self {
            v: [SpectralField::zeros(grid), SpectralField::zeros(grid)],
            ew: SpectralField::zeros(grid),
            epsilon,
            time,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon={eps} must lie in (0, 1]")));
    }
    Ok(())
}

fn phys(f: &SpectralField) -> Vec<f64> {
    inverse(f).into_values()
}

fn spec(grid: &Grid, vals: Vec<f64>) -> SpectralField {
    dealias(&forward(&PhysicalField::from_values_unchecked(grid, vals)))
}

fn vec3_max(a: &SpectralVec3) -> f64 {
    a.iter().map(|c| c.inverse().max_abs()).fold(0.0, f64::max)
}

fn heat3(a: &SpectralVec3, t: f64) -> Result<SpectralVec3> {
    Ok([apply_heat(&a[0], t)?, apply_heat(&a[1], t)?, apply_heat(&a[2], t)?])
}

fn axpy3(a: &SpectralVec3, s: f64, b: &SpectralVec3) -> SpectralVec3 {
    let mut out = a.clone();
    for i in 0..3 {
        out[i].axpy(s, &b[i]);
    }
    out
}

/// Grid values of a velocity `a` (3 components) paired with the gradient of
/// a field `b` (3 components): `Σ_i a_i ∂_i b_j` accumulated into `acc`.
fn add_transport(acc: &mut [Vec<f64>; 3], a: &[Vec<f64>; 3], grad_b: &[[Vec<f64>; 3]; 3], s: f64) {
    for j in 0..3 {
        for (idx, out) in acc[j].iter_mut().enumerate() {
            *out += s
                * (a[0][idx] * grad_b[j][0][idx]
                    + a[1][idx] * grad_b[j][1][idx]
                    + a[2][idx] * grad_b[j][2][idx]);
        }
    }
}

fn grad_phys(b: &SpectralVec3) -> [[Vec<f64>; 3]; 3] {
    let g = |c: &SpectralField| [phys(&c.derivative(0, 1)), phys(&c.derivative(1, 1)), phys(&c.derivative(2, 1))];
    [g(&b[0]), g(&b[1]), g(&b[2])]
}

/// Grid values of `(v, w)` from a rescaled vector `(v, εw)`.
fn unscaled_phys(b: &SpectralVec3, eps: f64) -> [Vec<f64>; 3] {
    let mut w = phys(&b[2]);
    for x in &mut w {
        *x /= eps;
    }
    [phys(&b[0]), phys(&b[1]), w]
}

/// `−P_ε (u·∇v, ε u·∇w)` with `u = (ũ1, ũ2, ũ3/ε)`.
pub fn nse_rhs(u: &SpectralVec3, eps: f64) -> Result<SpectralVec3> {
    let g = u[0].grid().clone();
    let a = unscaled_phys(u, eps);
    let gb = grad_phys(u);
    let mut acc = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    add_transport(&mut acc, &a, &gb, -1.0);
    let [a0, a1, a2] = acc;
    let n = [spec(&g, a0), spec(&g, a1), spec(&g, a2)];
    apply_projection_eps(&n, &ProjectionSpec::new(eps)?)
}

fn etd2_step3(
    u: &SpectralVec3,
    h: f64,
    rhs: impl Fn(&SpectralVec3) -> Result<SpectralVec3>,
) -> Result<SpectralVec3> {
    let r0 = rhs(u)?;
    let mid = heat3(&axpy3(u, 0.5 * h, &r0), 0.5 * h)?;
    let r1 = rhs(&mid)?;
    Ok(axpy3(&heat3(u, h)?, h, &heat3(&r1, 0.5 * h)?))
}

/// `div_ε` defect of a rescaled vector.
pub fn div_eps_defect(u: &SpectralVec3, eps: f64) -> Result<f64> {
    Ok(div_eps(u, eps)?.inverse().max_abs())
}

fn check_state(u: &SpectralVec3, eps: f64, t: f64) -> Result<f64> {
    for c in u {
        if c.coeffs().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("scaled state at t={t}")));
        }
    }
    let d = div_eps_defect(u, eps)?;
    if d > INVARIANT_TOL {
        return Err(Error::InvariantDrift {
            time: t,
            what: "div_eps".into(),
            value: d,
        });
    }
    Ok(d)
}

/// Solves the scaled equations from `u0 = (v0, w0)`, storing every step.
pub fn solve_scaled_nse(
    v0: &HVel,
    w0: &SpectralField,
    eps: f64,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory<ScaledState>> {
    let mut states = Vec::new();
    let meta = solve_scaled_nse_with(v0, w0, eps, t_final, dt, |s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory { states, dt, meta })
}

/// As [`solve_scaled_nse`], handing every step (including `t = 0`) to
/// `observer` instead of storing it.
pub fn solve_scaled_nse_with(
    v0: &HVel,
    w0: &SpectralField,
    eps: f64,
    t_final: f64,
    dt: f64,
    mut observer: impl FnMut(&ScaledState) -> Result<()>,
) -> Result<SolverMeta> {
    check_eps(eps)?;
    let steps = step_count(t_final, dt)?;
    let grid = v0[0].grid().clone();
    if !grid.is_layered() {
        return Err(Error::InvalidGrid("scaled NSE needs a layered grid".into()));
    }
    let mut u: SpectralVec3 = [v0[0].clone(), v0[1].clone(), w0.scale(eps)];
    let mut max_defect = check_state(&u, eps, 0.0)?;
    observer(&ScaledState {
        u: u.clone(),
        epsilon: eps,
        time: 0.0,
    })?;
    for n in 1..=steps {
        u = etd2_step3(&u, dt, |x| nse_rhs(x, eps))?;
        let t = n as f64 * dt;
        max_defect = max_defect.max(check_state(&u, eps, t)?);
        observer(&ScaledState {
            u: u.clone(),
            epsilon: eps,
            time: t,
        })?;
    }
    Ok(SolverMeta {
        dims: grid.dims().to_vec(),
        step: dt,
        store_every: 1,
        invariant_tol: INVARIANT_TOL,
        max_defect,
    })
}

/// `ũ_ε − ũ` at one time.
pub fn difference_of(nse: &ScaledState, pe: &HydroState) -> Result<DifferenceState> {
    if (nse.time - pe.time).abs() > 1e-12 * nse.time.abs().max(1.0) {
        return Err(Error::ShapeMismatch(format!(
            "times differ: {} vs {}",
            nse.time, pe.time
        )));
    }
    if nse.u[0].grid() != pe.v[0].grid() {
        return Err(Error::ShapeMismatch("NSE and PE grids differ".into()));
    }
    let eps = nse.epsilon;
    Ok(DifferenceState {
        v: [nse.u[0].sub(&pe.v[0]), nse.u[1].sub(&pe.v[1])],
        ew: nse.u[2].sub(&pe.w.scale(eps)),
        epsilon: eps,
        time: nse.time,
    })
}

/// Pointwise difference of two trajectories on the same time grid.
pub fn difference_direct(
    nse: &Trajectory<ScaledState>,
    pe: &Trajectory<HydroState>,
) -> Result<Trajectory<DifferenceState>> {
    if nse.len() != pe.len() || (nse.dt - pe.dt).abs() > 1e-14 * pe.dt {
        return Err(Error::ShapeMismatch(format!(
            "trajectories differ: {} states at dt={} vs {} at dt={}",
            nse.len(),
            nse.dt,
            pe.len(),
            pe.dt
        )));
    }
    let mut states = Vec::with_capacity(nse.len());
    let mut max_defect = 0.0f64;
    for (a, b) in nse.states.iter().zip(&pe.states) {
        let d = difference_of(a, b)?;
        max_defect = max_defect.max(div_eps_defect(&d.as_vec3(), d.epsilon)?);
        states.push(d);
    }
    Ok(Trajectory {
        states,
        dt: nse.dt,
        meta: SolverMeta {
            max_defect,
            ..nse.meta.clone()
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Stop once the sup-in-time update falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of restart segments on `[0, T]`.
    pub segments: usize,
    /// Keep the quadratic self-interaction `U·∇Ũ`.
    pub quadratic: bool,
    /// Keep the terms linear in `Ũ` that involve the PE solution.
    pub linear: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            segments: 1,
            quadratic: true,
            linear: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub trajectory: Trajectory<DifferenceState>,
    /// Sup-in-time update norm per iteration, all segments concatenated.
    pub updates: Vec<f64>,
    /// Successive update ratios.
    pub factors: Vec<f64>,
    /// Slope of `ln(update)` against the iteration index.
    pub log_slope: Option<f64>,
    pub converged: bool,
}

/// Data from the PE solution frozen at one node.
struct Node {
    /// `ũ = (v, εw)`
    u_tilde: SpectralVec3,
    /// `ε F̃`
    forcing: SpectralField,
}

/// Projected integrand `P_ε N(Ũ)` at one node.
fn picard_integrand(
    big: &SpectralVec3,
    node: &Node,
    eps: f64,
    opts: &PicardOptions,
) -> Result<SpectralVec3> {
    let g = big[0].grid().clone();
    let len = g.len();
    let mut acc = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let big_u = unscaled_phys(big, eps);
    let grad_big = grad_phys(big);
    if opts.quadratic {
        add_transport(&mut acc, &big_u, &grad_big, -1.0);
    }
    if opts.linear {
        let small_u = unscaled_phys(&node.u_tilde, eps);
        let grad_small = grad_phys(&node.u_tilde);
        add_transport(&mut acc, &small_u, &grad_big, -1.0);
        add_transport(&mut acc, &big_u, &grad_small, -1.0);
    }
    let [a0, a1, a2] = acc;
    let mut n = [spec(&g, a0), spec(&g, a1), spec(&g, a2)];
    n[2] = n[2].add(&node.forcing);
    apply_projection_eps(&n, &ProjectionSpec::new(eps)?)
}

fn least_squares_slope(y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = y
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (i as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Picard iteration for the difference `Ũ = (V, εW)` driven by a stored
/// PE trajectory.
///
/// The Duhamel integral uses the composite trapezoid rule on the stored
/// time grid, `I_{n+1} = e^{hΔ} I_n + (h/2)(e^{hΔ} G_n + G_{n+1})`, with
/// `G = P_ε N(Ũ)` and
/// `N = −(U·∇Ũ + u·∇Ũ + U·∇ũ) + (0, 0, ε F̃)`, `U = (V, Ũ3/ε)`.
pub fn solve_difference_picard(
    pe: &Trajectory<HydroState>,
    eps: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    let nodes: Vec<Node> = pe
        .states
        .iter()
        .map(|s| Node {
            u_tilde: [s.v[0].clone(), s.v[1].clone(), s.w.scale(eps)],
            forcing: compute_f_tilde(s, FTildeForm::Definition).scale(eps),
        })
        .collect();
    picard_on_nodes(pe, &nodes, eps, opts)
}

/// Picard iteration with a caller-provided forcing `F̃` per node (the
/// PE velocity still enters through the linear terms).
pub fn solve_difference_picard_forced(
    pe: &Trajectory<HydroState>,
    forcing: &[SpectralField],
    eps: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    if forcing.len() != pe.len() {
        return Err(Error::ShapeMismatch("one forcing field per node".into()));
    }
    let nodes: Vec<Node> = pe
        .states
        .iter()
        .zip(forcing)
        .map(|(s, f)| Node {
            u_tilde: [s.v[0].clone(), s.v[1].clone(), s.w.scale(eps)],
            forcing: f.scale(eps),
        })
        .collect();
    picard_on_nodes(pe, &nodes, eps, opts)
}

fn picard_on_nodes(
    pe: &Trajectory<HydroState>,
    nodes: &[Node],
    eps: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    check_eps(eps)?;
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument("Picard needs at least two time nodes".into()));
    }
    let segs = opts.segments.max(1);
    let intervals = nodes.len() - 1;
    if !intervals.is_multiple_of(segs) {
        return Err(Error::InvalidArgument(format!(
            "{segs} segments do not split {intervals} intervals"
        )));
    }
    let per = intervals / segs;
    let h = pe.dt;
    let grid = nodes[0].forcing.grid().clone();
    let zero3 = || {
        [
            SpectralField::zeros(&grid),
            SpectralField::zeros(&grid),
            SpectralField::zeros(&grid),
        ]
    };
    let mut solution: Vec<SpectralVec3> = vec![zero3()];
    let mut updates = Vec::new();
    let mut converged = true;
    for seg in 0..segs {
        let lo = seg * per;
        let start = solution[lo].clone();
        // iterate on nodes lo..=lo+per, initial value `start`
        let mut cur: Vec<SpectralVec3> = vec![start.clone(); per + 1];
        let mut growth = 0usize;
        let mut last = f64::INFINITY;
        let mut seg_ok = false;
        for _ in 0..opts.max_iter {
            let mut next = Vec::with_capacity(per + 1);
            let mut integral = start.clone();
            let mut g_prev = picard_integrand(&cur[0], &nodes[lo], eps, opts)?;
            next.push(integral.clone());
            for m in 1..=per {
                let g_cur = picard_integrand(&cur[m], &nodes[lo + m], eps, opts)?;
                let carried = heat3(&axpy3(&integral, 0.5 * h, &g_prev), h)?;
                integral = axpy3(&carried, 0.5 * h, &g_cur);
                next.push(integral.clone());
                g_prev = g_cur;
            }
            let upd = next
                .iter()
                .zip(&cur)
                .map(|(a, b)| {
                    let d = [a[0].sub(&b[0]), a[1].sub(&b[1]), a[2].sub(&b[2])];
                    vec3_max(&d)
                })
                .fold(0.0, f64::max);
            updates.push(upd);
            cur = next;
            if !upd.is_finite() {
                return Err(Error::NonFinite("Picard update".into()));
            }
            if upd < opts.tol {
                seg_ok = true;
                break;
            }
            if upd > last {
                growth += 1;
                if growth >= 3 {
                    return Err(Error::NonContraction {
                        factor: upd / last,
                        streak: growth,
                    });
                }
            } else {
                growth = 0;
            }
            last = upd;
        }
        converged &= seg_ok;
        solution.truncate(lo);
        solution.extend(cur);
    }
    let factors: Vec<f64> = updates
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let log_slope = least_squares_slope(&updates);
    let mut max_defect = 0.0f64;
    let states = solution
        .into_iter()
        .enumerate()
        .map(|(n, u)| {
            if let Ok(d) = div_eps_defect(&u, eps) {
                max_defect = max_defect.max(d);
            }
            let [a, b, c] = u;
            DifferenceState {
                v: [a, b],
                ew: c,
                epsilon: eps,
                time: pe.states[n].time,
            }
        })
        .collect();
    Ok(PicardResult {
        trajectory: Trajectory {
            states,
            dt: h,
            meta: SolverMeta {
                max_defect,
                ..pe.meta.clone()
            },
        },
        updates,
        factors,
        log_slope,
        converged,
    })
}

/// Fujita–Kato functional of a difference trajectory in `L∞_H L^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub epsilon: f64,
    pub q: f64,
    pub sup_v: f64,
    /// `sup t^{1/2} ‖∇V‖`
    pub sup_tgrad_v: f64,
    pub sup_ew: f64,
    /// `sup t^{1/2} ‖ε∇W‖`
    pub sup_tgrad_ew: f64,
    /// Sum of the four terms above.
    pub total: f64,
    /// `sup ‖W‖`, unweighted and without the factor ε.
    pub sup_w: f64,
    pub samples: usize,
}

/// Streaming form of [`fujita_kato_report`].
#[derive(Debug, Clone)]
pub struct FujitaKato {
    report: NormReport,
}

impl FujitaKato {
    pub fn new(epsilon: f64, q: f64) -> Self {
        Self {
            report: NormReport {
                epsilon,
                q,
                sup_v: 0.0,
                sup_tgrad_v: 0.0,
                sup_ew: 0.0,
                sup_tgrad_ew: 0.0,
                total: 0.0,
                sup_w: 0.0,
                samples: 0,
            },
        }
    }

    pub fn push(&mut self, d: &DifferenceState) -> Result<()> {
        let r = &mut self.report;
        let w = t_half(d.time);
        let v = norm_spectral(&d.v, r.q)?;
        let gv = norm_spectral(&gradient(&d.v), r.q)?;
        let ew = norm_spectral(std::slice::from_ref(&d.ew), r.q)?;
        let gew = norm_spectral(&gradient(std::slice::from_ref(&d.ew)), r.q)?;
        r.sup_v = r.sup_v.max(v);
        r.sup_tgrad_v = r.sup_tgrad_v.max(w * gv);
        r.sup_ew = r.sup_ew.max(ew);
        r.sup_tgrad_ew = r.sup_tgrad_ew.max(w * gew);
        r.sup_w = r.sup_w.max(ew / d.epsilon);
        r.samples += 1;
        Ok(())
    }

    pub fn finish(mut self) -> NormReport {
        let r = &mut self.report;
        r.total = r.sup_v + r.sup_tgrad_v + r.sup_ew + r.sup_tgrad_ew;
        self.report
    }
}

fn t_half(t: f64) -> f64 {
    t.max(0.0).sqrt()
}

pub fn fujita_kato_report(diff: &Trajectory<DifferenceState>, q: f64) -> Result<NormReport> {
    let first = diff
        .states
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty difference trajectory".into()))?;
    let mut acc = FujitaKato::new(first.epsilon, q);
    for s in &diff.states {
        acc.push(s)?;
    }
    Ok(acc.finish())
}

/// Bisects on `ε ∈ [lo, hi]` for the largest value at which Picard still
/// contracts. Returns `None` if it fails already at `lo`.
pub fn largest_contracting_eps(
    pe: &Trajectory<HydroState>,
    lo: f64,
    hi: f64,
    rounds: usize,
    opts: &PicardOptions,
) -> Result<Option<f64>> {
    let contracts = |e: f64| -> Result<bool> {
        match solve_difference_picard(pe, e, opts) {
            Ok(r) => Ok(r.converged),
            Err(Error::NonContraction { .. }) | Err(Error::NonFinite(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if contracts(hi)? {
        return Ok(Some(hi));
    }
    if !contracts(lo)? {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..rounds {
        let m = (a * b).sqrt();
        if contracts(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(a))
}
