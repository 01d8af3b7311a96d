//! C interface to the `hydrostat` solvers and estimate probes.
//!
//! Every function returns an [`HsStatus`]; results go through out
//! pointers. Objects are opaque handles created by `hs_*_new`/`hs_*_solve`
//! and released with the matching `hs_*_free`. After a failure the message
//! is available from [`hs_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hydrostat::estimates::{prop22_ratio, InequalityId};
use hydrostat::harness::fit_rate;
use hydrostat::nse::{difference_of, solve_scaled_nse_with, FujitaKato};
use hydrostat::pe::{
    default_initial_data, random_admissible_v, reconstruct_w, solve_pe, HydroState, Trajectory,
};
use hydrostat::semigroup::heat_kernel_l1;
use hydrostat::{Error, Grid, SpectralField};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Non-finite values, invariant drift or a failed iteration.
    Numerical = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

/// Initial data choice for [`hs_pe_solve`].
pub const HS_PRESET_DEFAULT: u32 = 0;
pub const HS_PRESET_ZERO: u32 = 1;
pub const HS_PRESET_RANDOM: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HsRateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Layered `n_h × n_h × n_v` grid.
pub struct HsGrid(Grid);

/// A stored primitive-equation trajectory.
pub struct HsPeRun(Trajectory<HydroState>);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|b| *b != 0));
    });
}

fn status_of(e: &Error) -> HsStatus {
    match e {
        Error::Io(_) | Error::Format(_) => HsStatus::Io,
        Error::NonFinite(_)
        | Error::InvariantDrift { .. }
        | Error::Quadrature(_)
        | Error::NonContraction { .. } => HsStatus::Numerical,
        Error::AtEpsilon { source, .. } => status_of(source),
        _ => HsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HsStatus>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            HsStatus::Internal
        }
    }
}

fn fail(e: Error) -> HsStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> HsStatus {
    set_error(&format!("{what} is null"));
    HsStatus::NullPointer
}

fn invalid(msg: String) -> HsStatus {
    set_error(&msg);
    HsStatus::InvalidArgument
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => c"unknown",
    };
    V.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length
/// without the terminator. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hs_grid_new(n_h: usize, n_v: usize, out: *mut *mut HsGrid) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = Grid::new_3d(n_h, n_v).map_err(fail)?;
        *out = Box::into_raw(Box::new(HsGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or come from [`hs_grid_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hs_grid_free(grid: *mut HsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid points.
///
/// # Safety
/// `grid` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hs_grid_len(grid: *const HsGrid, out: *mut usize) -> HsStatus {
    guard(|| {
        let (Some(g), false) = (grid.as_ref(), out.is_null()) else {
            return Err(null("grid or out"));
        };
        *out = g.0.len();
        Ok(())
    })
}

/// Solves the primitive equations on `grid` up to `t_final` with step `dt`.
/// `seed` and `amplitude` are used by [`HS_PRESET_RANDOM`] only.
///
/// # Safety
/// `grid` must be a live handle, `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hs_pe_solve(
    grid: *const HsGrid,
    preset: u32,
    seed: u64,
    amplitude: f64,
    t_final: f64,
    dt: f64,
    out: *mut *mut HsPeRun,
) -> HsStatus {
    guard(|| {
        let (Some(g), false) = (grid.as_ref(), out.is_null()) else {
            return Err(null("grid or out"));
        };
        let v0 = match preset {
            HS_PRESET_DEFAULT => default_initial_data(&g.0).map_err(fail)?,
            HS_PRESET_ZERO => [SpectralField::zeros(&g.0), SpectralField::zeros(&g.0)],
            HS_PRESET_RANDOM => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(invalid(format!("amplitude={amplitude}")));
                }
                random_admissible_v(&g.0, seed, amplitude)
            }
            p => return Err(invalid(format!("unknown preset {p}"))),
        };
        let traj = solve_pe(&v0, t_final, dt).map_err(fail)?;
        *out = Box::into_raw(Box::new(HsPeRun(traj)));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or come from [`hs_pe_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hs_pe_free(run: *mut HsPeRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of stored states.
///
/// # Safety
/// `run` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hs_pe_len(run: *const HsPeRun, out: *mut usize) -> HsStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return Err(null("run or out"));
        };
        *out = r.0.len();
        Ok(())
    })
}

/// Time and grid sup of `|v|` and `|w|` of stored state `index`.
///
/// # Safety
/// `run` must be a live handle; the out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hs_pe_state_info(
    run: *const HsPeRun,
    index: usize,
    time: *mut f64,
    sup_v: *mut f64,
    sup_w: *mut f64,
) -> HsStatus {
    guard(|| {
        let Some(r) = run.as_ref() else {
            return Err(null("run"));
        };
        if time.is_null() || sup_v.is_null() || sup_w.is_null() {
            return Err(null("out pointer"));
        }
        let s = r
            .0
            .states
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of {}", r.0.len())))?;
        let (a, b) = (s.v[0].inverse(), s.v[1].inverse());
        let m = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max);
        *time = s.time;
        *sup_v = m;
        *sup_w = s.w.inverse().max_abs();
        Ok(())
    })
}

/// Fujita–Kato total of the hydrostatic error at `eps` in `L∞_H L^q`,
/// solving the scaled equations from the run's initial state with the
/// run's step.
///
/// # Safety
/// `run` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hs_difference_total(
    run: *const HsPeRun,
    eps: f64,
    q: f64,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return Err(null("run or out"));
        };
        let pe = &r.0;
        let (Some(first), Some(last)) = (pe.states.first(), pe.states.last()) else {
            return Err(invalid("empty run".into()));
        };
        if pe.meta.store_every != 1 {
            return Err(invalid("run must store every step".into()));
        }
        let w0 = reconstruct_w(&first.v).map_err(fail)?;
        let mut acc = FujitaKato::new(eps, q);
        let mut n = 0usize;
        solve_scaled_nse_with(&first.v, &w0, eps, last.time - first.time, pe.meta.step, |s| {
            let d = difference_of(s, &pe.states[n])?;
            n += 1;
            acc.push(&d)
        })
        .map_err(fail)?;
        *out = acc.finish().total;
        Ok(())
    })
}

/// Measured constant of the integral inequality `which` (1 to 4).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hs_prop22_ratio(
    which: u32,
    alpha: f64,
    beta: f64,
    eps: f64,
    t: f64,
    out: *mut f64,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let idx = u8::try_from(which).map_err(|_| invalid(format!("inequality {which}")))?;
        let id = InequalityId::prop22(idx).map_err(fail)?;
        *out = prop22_ratio(id, alpha, beta, eps, t).map_err(fail)?;
        Ok(())
    })
}

/// `‖K_t‖_{L¹(T^d)}` by the trapezoid rule on `n` points per axis.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hs_heat_kernel_l1(t: f64, d: usize, n: usize, out: *mut f64) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = heat_kernel_l1(t, d, n).map_err(fail)?;
        Ok(())
    })
}

/// Least-squares fit of `ln value` against `ln eps` over `n` pairs.
///
/// # Safety
/// `eps` and `values` must be valid for `n` reads, `out` for a write.
#[no_mangle]
pub unsafe extern "C" fn hs_fit_rate(
    eps: *const f64,
    values: *const f64,
    n: usize,
    out: *mut HsRateFit,
) -> HsStatus {
    guard(|| {
        if eps.is_null() || values.is_null() || out.is_null() {
            return Err(null("eps, values or out"));
        }
        let e = std::slice::from_raw_parts(eps, n);
        let v = std::slice::from_raw_parts(values, n);
        let pairs: Vec<(f64, f64)> = e.iter().copied().zip(v.iter().copied()).collect();
        let f = fit_rate(&pairs).map_err(fail)?;
        *out = HsRateFit {
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
        };
        Ok(())
    })
}
