//! Adaptive quadrature for positive integrands with algebraic endpoint
//! behaviour: a double-exponential (tanh-sinh) rule used by the estimate
//! probes, and an adaptive Gauss–Kronrod rule kept as an independent check.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels (tanh-sinh) or
    /// the summed Kronrod error estimate (Gauss–Kronrod).
    pub error: f64,
    pub evals: usize,
}

const TS_TMAX: f64 = 6.0;
const TS_MAX_LEVEL: u32 = 12;

/// Tanh-sinh rule on `[a, b]`.
///
/// The integrand receives `(x, x − a, b − x)`; the distances are computed
/// without cancellation, so integrands can resolve endpoint singularities
/// far below the spacing of doubles near `a` or `b`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadResult>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    let half = 0.5 * (b - a);
    let mut evals = 0usize;
    let mut node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        if !cu.is_finite() {
            return 0.0;
        }
        let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        let dl = half * u.exp() / cu;
        let dr = half * (-u).exp() / cu;
        if dl == 0.0 || dr == 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + dl } else { b - dr };
        evals += 1;
        let v = f(x, dl, dr);
        if v.is_finite() {
            w * v
        } else {
            f64::NAN
        }
    };

    let mut h = 1.0f64;
    let n0 = (TS_TMAX / h) as i64;
    let mut sum: f64 = (-n0..=n0).map(|j| node(j as f64 * h)).sum();
    let mut prev = sum * h;
    for level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        let n = (TS_TMAX / h) as i64;
        let mut add = 0.0;
        let mut j = -n + if n % 2 == 0 { 1 } else { 0 };
        while j <= n {
            add += node(j as f64 * h);
            j += 2;
        }
        sum += add;
        let cur = sum * h;
        if !cur.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        let err = (cur - prev).abs();
        if level >= 3 && (err <= rel_tol * cur.abs() || (cur == 0.0 && prev == 0.0)) {
            return Ok(QuadResult {
                value: cur,
                error: err,
                evals,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh on [{a}, {b}] did not reach rel tol {rel_tol:e}"
    )))
}

/// `∫_0^∞ g(σ) dσ` via `σ = tan θ`, split at the given positive breakpoints.
///
/// The last piece ends at `θ = π/2`, where `σ = cot(π/2 − θ)` is evaluated
/// from the endpoint distance.
pub fn integrate_half_line<G>(g: G, breakpoints: &[f64], rel_tol: f64) -> Result<QuadResult>
where
    G: Fn(f64) -> f64,
{
    let mut thetas = vec![0.0];
    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > 0.0)
        .collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    thetas.extend(bps.iter().map(|b| b.atan()));
    thetas.push(FRAC_PI_2);
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evals: 0,
    };
    for w in thetas.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if tb <= ta {
            continue;
        }
        let last = tb == FRAC_PI_2;
        let first = ta == 0.0;
        let piece = tanh_sinh(
            |theta, dl, dr| {
                if last && dr < 0.5 {
                    let s = dr.sin();
                    let v = g(dr.cos() / s);
                    if v == 0.0 {
                        0.0
                    } else {
                        v / s / s
                    }
                } else {
                    let th = if first && dl < 0.5 { dl } else { theta };
                    let c = th.cos();
                    g(th.tan()) / (c * c)
                }
            },
            ta,
            tb,
            rel_tol,
        )?;
        total.value += piece.value;
        total.error += piece.error;
        total.evals += piece.evals;
    }
    Ok(total)
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) on a finite interval.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evals = 15;
    loop {
        let value: f64 = intervals.iter().map(|i| i.2).sum();
        let error: f64 = intervals.iter().map(|i| i.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature("non-finite Gauss-Kronrod sum".into()));
        }
        if error <= rel_tol * value.abs() {
            return Ok(QuadResult {
                value,
                error,
                evals,
            });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "Gauss-Kronrod hit {max_intervals} intervals, error {error:e}"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            return Err(Error::Quadrature("interval underflow".into()));
        }
        let (v1, e1) = gk15(&f, lo, m);
        let (v2, e2) = gk15(&f, m, hi);
        evals += 30;
        intervals.push((lo, m, v1, e1));
        intervals.push((m, hi, v2, e2));
    }
}

/// `∫_0^∞ g` by Gauss–Kronrod: `[0, 1]` directly and `[1, ∞)` through `σ = 1/u`.
pub fn gauss_kronrod_half_line<G: Fn(f64) -> f64>(g: G, rel_tol: f64) -> Result<QuadResult> {
    let lo = gauss_kronrod(&g, 0.0, 1.0, rel_tol, 4000)?;
    let hi = gauss_kronrod(|u: f64| g(1.0 / u) / (u * u), 0.0, 1.0, rel_tol, 4000)?;
    Ok(QuadResult {
        value: lo.value + hi.value,
        error: lo.error + hi.error,
        evals: lo.evals + hi.evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_half_line() {
        let r = integrate_half_line(|s| (1.0 + s).powf(-1.5), &[], 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
        let r = gauss_kronrod_half_line(|s| (1.0 + s).powf(-1.5), 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn endpoint_singularities() {
        // ∫_0^∞ s^{-1/2} (1+s)^{-1} ds = π
        let g = |s: f64| s.powf(-0.5) / (1.0 + s);
        let r = integrate_half_line(g, &[1e-4], 1e-10).unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-9, "{}", r.value);
        // slow algebraic tail: ∫_0^∞ (1+s)^{-1.1} ds = 10
        let r = integrate_half_line(|s| (1.0 + s).powf(-1.1), &[], 1e-10).unwrap();
        assert!((r.value - 10.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn finite_interval() {
        let r = tanh_sinh(|x, _, _| x.exp(), 0.0, 1.0, 1e-13).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let r = gauss_kronrod(|x| x.exp(), 0.0, 1.0, 1e-13, 100).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        assert!(tanh_sinh(|x, _, _| x, 1.0, 0.0, 1e-9).is_err());
    }
}
