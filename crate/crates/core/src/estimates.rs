//! Numerical probes of the quantitative inequalities behind the
//! hydrostatic limit. Every probe returns an [`EstimateCertificate`]
//! holding the sampled parameters, the measured ratios and a verdict.
//!
//! "Uniform in ε" is read as: for every fixed choice of the remaining
//! parameters, `max_ε C(ε) / C(ε_max) < 2`, where `ε_max` is the largest
//! sampled ε. Constants that decay as ε → 0 therefore pass; the raw
//! max/min spread is reported next to it.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aniso::{antiderivative_fluct_spectral, fluctuation_spectral, gradient, horizontal_gradient, norm_spectral};
use crate::error::{Error, Result};
use crate::pe::{div_h, HydroState, Trajectory};
use crate::quadrature::{integrate_half_line, QuadResult};
use crate::random::{band_limited_vector, band_limited_with};
use crate::semigroup::{
    apply_heat, apply_projection_eps, apply_split_heat, composite_heat_proj, kernel_d1_l1,
    kernel_d2_l1, Deriv, ProjectionSpec, SpectralVec3,
};
use crate::spectral::{product, Grid, SpectralField};

/// Relative tolerance of every improper integral.
pub const QUAD_TOL: f64 = 1e-9;
/// Largest accepted growth of a constant over the sampled ε range.
pub const UNIFORMITY_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InequalityId {
    #[serde(rename = "P2.2-1")]
    P22a,
    #[serde(rename = "P2.2-2")]
    P22b,
    #[serde(rename = "P2.2-3")]
    P22c,
    #[serde(rename = "P2.2-4")]
    P22d,
    #[serde(rename = "P2.1")]
    P21,
    #[serde(rename = "P2.3")]
    P23,
    #[serde(rename = "P3.1")]
    P31,
    #[serde(rename = "P3.2")]
    P32,
    #[serde(rename = "P3.4")]
    P34,
    #[serde(rename = "P3.6")]
    P36,
    #[serde(rename = "P3.7")]
    P37,
    #[serde(rename = "INTERP")]
    Interp,
}

impl InequalityId {
    pub const ALL: [InequalityId; 12] = [
        Self::P22a,
        Self::P22b,
        Self::P22c,
        Self::P22d,
        Self::P21,
        Self::P23,
        Self::P31,
        Self::P32,
        Self::P34,
        Self::P36,
        Self::P37,
        Self::Interp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::P22a => "P2.2-1",
            Self::P22b => "P2.2-2",
            Self::P22c => "P2.2-3",
            Self::P22d => "P2.2-4",
            Self::P21 => "P2.1",
            Self::P23 => "P2.3",
            Self::P31 => "P3.1",
            Self::P32 => "P3.2",
            Self::P34 => "P3.4",
            Self::P36 => "P3.6",
            Self::P37 => "P3.7",
            Self::Interp => "INTERP",
        }
    }

    /// Index 1..=4 of a Prop 2.2 integral.
    pub fn prop22(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Self::P22a),
            2 => Ok(Self::P22b),
            3 => Ok(Self::P22c),
            4 => Ok(Self::P22d),
            _ => Err(Error::InvalidArgument(format!("no integral inequality {index}"))),
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown inequality id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One sampled parameter point. Unused parameters stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<f64>,
    /// Random fields behind this point.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCertificate {
    pub inequality_id: InequalityId,
    /// Distinguishes several certificates of one inequality.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variant: Option<String>,
    pub parameter_grid: Vec<ParamPoint>,
    /// Measured constant per parameter point.
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    /// `max_ε S(ε)/S(ε_max)`, `S(ε)` the largest constant at that ε.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_growth: Option<f64>,
    /// `max_ε S(ε)/min_ε S(ε)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl EstimateCertificate {
    fn assemble(
        id: InequalityId,
        points: Vec<ParamPoint>,
        ratios: Vec<f64>,
        seed: Option<u64>,
    ) -> Self {
        let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
        let (eps_growth, eps_spread) = eps_variation(&points, &ratios);
        Self {
            inequality_id: id,
            variant: None,
            parameter_grid: points,
            ratios,
            sup_ratio,
            eps_growth,
            eps_spread,
            seed,
            verdict: Verdict::Fail,
            notes: Vec::new(),
        }
    }

    fn all_finite(&self) -> bool {
        self.ratios.iter().all(|r| r.is_finite() && *r >= 0.0)
    }

    /// Pass iff all ratios are finite and the ε-growth (when defined) is
    /// below [`UNIFORMITY_FACTOR`].
    fn judge_uniform(mut self) -> Self {
        let uniform = self.eps_growth.is_none_or(|g| g < UNIFORMITY_FACTOR);
        self.verdict = if self.all_finite() && uniform {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Merges certificates of the same inequality into one.
    pub fn merge(parts: Vec<EstimateCertificate>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to merge".into()))?;
        let id = first.inequality_id;
        let seed = first.seed;
        let variant = first.variant.clone();
        if parts.iter().any(|c| c.inequality_id != id) {
            return Err(Error::InvalidArgument("mixed inequality ids".into()));
        }
        let pass = parts.iter().all(|c| c.passed());
        let notes: Vec<String> = parts.iter().flat_map(|c| c.notes.clone()).collect();
        let mut points = Vec::new();
        let mut ratios = Vec::new();
        for c in parts {
            points.extend(c.parameter_grid);
            ratios.extend(c.ratios);
        }
        let mut out = Self::assemble(id, points, ratios, seed);
        out.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        out.notes = notes;
        out.variant = variant;
        Ok(out)
    }

    /// File stem: the id, plus the variant when present.
    pub fn name(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}_{v}", self.inequality_id),
            None => self.inequality_id.to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Flat CSV row, one per parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub inequality_id: String,
    pub variant: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub trials: Option<usize>,
    pub ratio: f64,
    pub seed: Option<u64>,
    pub verdict: Verdict,
}

pub fn certificate_rows(certs: &[EstimateCertificate]) -> Vec<CertificateRow> {
    let mut rows = Vec::new();
    for c in certs {
        for (p, r) in c.parameter_grid.iter().zip(&c.ratios) {
            rows.push(CertificateRow {
                inequality_id: c.inequality_id.to_string(),
                variant: c.variant.clone(),
                alpha: p.alpha,
                beta: p.beta,
                eps: p.eps,
                t: p.t,
                p: p.p,
                q: p.q,
                s: p.s,
                trials: p.trials,
                ratio: *r,
                seed: c.seed,
                verdict: c.verdict,
            });
        }
    }
    rows
}

pub fn write_certificates_csv<W: Write>(out: W, certs: &[EstimateCertificate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in certificate_rows(certs) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_certificates_csv<R: std::io::Read>(input: R) -> Result<Vec<CertificateRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Writes `<dir>/<id>.json` per certificate and `<dir>/certificates.csv`.
pub fn write_certificates(dir: &Path, certs: &[EstimateCertificate]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for c in certs {
        std::fs::write(dir.join(format!("{}.json", c.name())), c.to_json()? + "\n")?;
    }
    write_certificates_csv(std::fs::File::create(dir.join("certificates.csv"))?, certs)
}

/// `S(ε)`, the supremum of the constants over every other parameter at
/// fixed ε, compared across ε: growth `max S / S(ε_max)` and spread
/// `max S / min S`.
fn eps_variation(points: &[ParamPoint], ratios: &[f64]) -> (Option<f64>, Option<f64>) {
    use std::collections::BTreeMap;
    let mut sup: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (p, r) in points.iter().zip(ratios) {
        if let Some(e) = p.eps {
            let entry = sup.entry(e.to_bits()).or_insert((e, f64::NEG_INFINITY));
            entry.1 = entry.1.max(*r);
        }
    }
    if sup.len() < 2 {
        return (None, None);
    }
    let reference = sup
        .values()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|m| m.1)
        .unwrap_or(f64::NAN);
    let hi = sup.values().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = sup.values().map(|m| m.1).fold(f64::INFINITY, f64::min);
    // 0/0 (identically vanishing constants) counts as uniform
    if hi == 0.0 {
        return (Some(1.0), Some(1.0));
    }
    (Some(hi / reference), Some(hi / lo))
}

// ---------------------------------------------------------------------
// Integral inequalities

/// Exponents `(a, b)` of the integrand `(t + s)^a (t + s/ε²)^b` and the
/// power of ε on the right-hand side.
pub fn prop22_exponents(id: InequalityId, alpha: f64, beta: f64) -> Result<(f64, f64, f64)> {
    Ok(match id {
        InequalityId::P22a => (-1.0 - alpha / 2.0, -beta / 2.0, beta),
        InequalityId::P22b => (-0.5 - alpha / 2.0, -0.5 - beta / 2.0, 1.0 + beta),
        InequalityId::P22c => (-1.0, -(alpha + beta) / 2.0, alpha + beta),
        InequalityId::P22d => (-0.5, -0.5 - (alpha + beta) / 2.0, 1.0),
        other => {
            return Err(Error::InvalidArgument(format!("{other} is not an integral inequality")))
        }
    })
}

fn check_prop22(alpha: f64, beta: f64, eps: f64, t: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha={alpha} must lie in (0, 1]")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta={beta} must lie in (0, 1)")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon={eps} must lie in (0, 1]")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t={t} must be > 0")));
    }
    Ok(())
}

/// Left-hand side integrated directly in `s`, with breakpoints at `tε²` and `t`.
pub fn prop22_lhs(id: InequalityId, alpha: f64, beta: f64, eps: f64, t: f64) -> Result<QuadResult> {
    check_prop22(alpha, beta, eps, t)?;
    let (a, b, _) = prop22_exponents(id, alpha, beta)?;
    let e2 = eps * eps;
    integrate_half_line(
        |s| (t + s).powf(a) * (t + s / e2).powf(b),
        &[t * e2, t],
        QUAD_TOL,
    )
}

/// Left-hand side after `s = tσ`: `t^{1+a+b} ∫ (1+σ)^a (1+σ/ε²)^b dσ`.
pub fn prop22_lhs_scaled(
    id: InequalityId,
    alpha: f64,
    beta: f64,
    eps: f64,
    t: f64,
) -> Result<QuadResult> {
    check_prop22(alpha, beta, eps, t)?;
    let (a, b, _) = prop22_exponents(id, alpha, beta)?;
    let e2 = eps * eps;
    let r = integrate_half_line(
        |s| (1.0 + s).powf(a) * (1.0 + s / e2).powf(b),
        &[e2, 1.0],
        QUAD_TOL,
    )?;
    let scale = t.powf(1.0 + a + b);
    Ok(QuadResult {
        value: r.value * scale,
        error: r.error * scale,
        evals: r.evals,
    })
}

/// `LHS / (t^{−α/2−β/2} ε^{power})`.
pub fn prop22_ratio(id: InequalityId, alpha: f64, beta: f64, eps: f64, t: f64) -> Result<f64> {
    let (_, _, power) = prop22_exponents(id, alpha, beta)?;
    let lhs = prop22_lhs(id, alpha, beta, eps, t)?;
    Ok(lhs.value / (t.powf(-(alpha + beta) / 2.0) * eps.powf(power)))
}

pub fn certify_integral_inequality(
    id: InequalityId,
    alpha: f64,
    beta: f64,
    eps_grid: &[f64],
    t_grid: &[f64],
) -> Result<EstimateCertificate> {
    let points: Vec<ParamPoint> = t_grid
        .iter()
        .flat_map(|&t| {
            eps_grid.iter().map(move |&e| ParamPoint {
                alpha: Some(alpha),
                beta: Some(beta),
                eps: Some(e),
                t: Some(t),
                ..ParamPoint::default()
            })
        })
        .collect();
    let ratios = points
        .par_iter()
        .map(|p| prop22_ratio(id, alpha, beta, p.eps.unwrap_or(1.0), p.t.unwrap_or(1.0)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(EstimateCertificate::assemble(id, points, ratios, None).judge_uniform())
}

/// One certificate over the whole `(α, β)` product grid.
pub fn certify_integral_suite(
    id: InequalityId,
    alphas: &[f64],
    betas: &[f64],
    eps_grid: &[f64],
    t_grid: &[f64],
) -> Result<EstimateCertificate> {
    let mut parts = Vec::new();
    for &a in alphas {
        for &b in betas {
            parts.push(certify_integral_inequality(id, a, b, eps_grid, t_grid)?);
        }
    }
    // uniformity is judged on the supremum over the whole grid
    Ok(EstimateCertificate::merge(parts)?.judge_uniform())
}

// ---------------------------------------------------------------------
// Excluded operator

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonUniformityWitness {
    pub t: f64,
    pub eps: Vec<f64>,
    /// `t^{1/2} ε^{−2} ∫₀^∞ ‖∂K_{t+s}‖₁ ‖∂²K_{t+s/ε²}‖₁ ds`
    pub constants: Vec<f64>,
    /// Least-squares slope of the constant against `ln(1/ε)`.
    pub slope: f64,
    pub detected: bool,
}

/// Constant of the kernel-product bound for `e^{tΔ} P_ε ∂3²/ε² ∂_j`
/// on the torus: `t^{1/2} ε^{−2} ∫₀^∞ ‖∂K_{t+s}‖₁ ‖∂²K_{t+s/ε²}‖₁ ds`.
pub fn excluded_operator_constant(eps: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0 && t > 0.0) {
        return Err(Error::InvalidArgument(format!("bad (eps, t) = ({eps}, {t})")));
    }
    let e2 = eps * eps;
    let r = integrate_half_line(
        |s| kernel_d1_l1(t + s) * kernel_d2_l1(t + s / e2),
        &[t * e2, e2, t, 1.0],
        QUAD_TOL,
    )?;
    Ok(t.sqrt() * r.value / e2)
}

/// Measures the growth of [`excluded_operator_constant`] as ε decreases.
///
/// On the torus the kernels decay exponentially for times beyond 1, so the
/// `ln(1/ε)` growth only shows while `ε² ≳ t`; choose `t` accordingly.
pub fn nonuniformity_witness(eps_grid: &[f64], t: f64) -> Result<NonUniformityWitness> {
    let constants = eps_grid
        .par_iter()
        .map(|&e| excluded_operator_constant(e, t))
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = eps_grid.iter().map(|e| (1.0 / e).ln()).collect();
    let slope = linear_slope(&xs, &constants)
        .ok_or_else(|| Error::InvalidArgument("witness needs two distinct ε".into()))?;
    Ok(NonUniformityWitness {
        t,
        eps: eps_grid.to_vec(),
        constants,
        slope,
        detected: slope > 0.0,
    })
}

fn linear_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

// ---------------------------------------------------------------------
// Field probes

/// Grid and sampling parameters shared by the randomized probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldProbe {
    pub n_h: usize,
    pub n_v: usize,
    pub trials: usize,
    pub seed: u64,
    pub q: f64,
}

impl Default for FieldProbe {
    fn default() -> Self {
        Self {
            n_h: 16,
            n_v: 16,
            trials: 64,
            seed: 0,
            q: 1.0,
        }
    }
}

impl FieldProbe {
    fn grid(&self) -> Result<Grid> {
        Grid::new_3d(self.n_h, self.n_v)
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if !(self.q >= 1.0) {
            return Err(Error::InvalidArgument(format!("q={} must be >= 1", self.q)));
        }
        Ok(())
    }

    fn trial_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
    }
}

fn norm(c: &[SpectralField], q: f64) -> Result<f64> {
    norm_spectral(c, q)
}

/// Vertical-derivative sup bound. For `mean_free`, checks
/// `‖f‖_∞ ≤ ‖∂3 f‖`; otherwise `‖f‖_∞ ≤ ‖f‖ + ‖∂3 f‖`, both norms in
/// `L∞_H L^q`. A ratio above 1 is a violation.
pub fn sup_bound_ratio(f: &SpectralField, q: f64, mean_free: bool) -> Result<f64> {
    let lhs = f.inverse().max_abs();
    let d3 = norm(std::slice::from_ref(&f.derivative(2, 1)), q)?;
    let rhs = if mean_free {
        d3
    } else {
        d3 + norm(std::slice::from_ref(f), q)?
    };
    if rhs == 0.0 {
        return Ok(if lhs == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(lhs / rhs)
}

/// Randomized check of the sup bound on `probe.trials` mean-free fields and
/// as many general ones. The verdict requires every ratio ≤ 1.
pub fn certify_sup_bound(probe: &FieldProbe) -> Result<EstimateCertificate> {
    probe.check()?;
    let g = probe.grid()?;
    let results = (0..probe.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(probe.trial_seed(i));
            let f = band_limited_with(&g, &mut rng, None);
            let mf = fluctuation_spectral(&f);
            Ok((sup_bound_ratio(&mf, probe.q, true)?, sup_bound_ratio(&f, probe.q, false)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let point = |s: f64| ParamPoint {
        q: Some(probe.q),
        s: Some(s),
        trials: Some(1),
        ..ParamPoint::default()
    };
    // s = 0 marks the mean-free family, s = 1 the general one
    let mut points = Vec::new();
    let mut ratios = Vec::new();
    for (a, b) in &results {
        points.push(point(0.0));
        ratios.push(*a);
        points.push(point(1.0));
        ratios.push(*b);
    }
    let violations = ratios.iter().filter(|r| **r > 1.0).count();
    let mut c = EstimateCertificate::assemble(InequalityId::P31, points, ratios, Some(probe.seed));
    c.verdict = if violations == 0 && c.all_finite() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    c.notes.push(format!(
        "{} mean-free and {} general fields on a {}x{}x{} grid, {violations} violations",
        probe.trials, probe.trials, probe.n_h, probe.n_h, probe.n_v
    ));
    Ok(c)
}

/// `div_ε (f ⊗ g)`, component `i` equal to `Σ_j ∂_j (f_i g_j)` with the
/// `j = 3` derivative divided by ε.
pub fn div_eps_tensor(f: &SpectralVec3, g: &SpectralVec3, eps: f64) -> SpectralVec3 {
    let comp = |i: usize| {
        let mut out = product(&f[i], &g[0]).derivative(0, 1);
        out.axpy(1.0, &product(&f[i], &g[1]).derivative(1, 1));
        out.axpy(1.0 / eps, &product(&f[i], &g[2]).derivative(2, 1));
        out
    };
    [comp(0), comp(1), comp(2)]
}

/// Which nonlinear bound to probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonlinearBound {
    /// `‖e^{tΔ} P_ε div_ε(f⊗g)‖ ≲ t^{−1/2}[min(…) + ‖f‖‖∇g‖]`
    P32,
    /// `‖∇ e^{tΔ} P_ε div_ε(f⊗g)‖ ≲ t^{−1}[min(…) + ‖f‖‖∇g‖]`
    P34a,
    /// `‖∇ e^{tΔ} P_ε div_ε(f⊗g)‖ ≲ t^{−1/2} ‖∇f‖(‖g‖ + ‖∇g‖)`
    P34b,
}

/// Ratio of the left to the right side of a nonlinear bound, `None` for
/// the 0/0 case.
pub fn nonlinear_ratio(
    which: NonlinearBound,
    f: &SpectralVec3,
    g: &SpectralVec3,
    eps: f64,
    t: f64,
    q: f64,
) -> Result<Option<f64>> {
    let d = div_eps_tensor(f, g, eps);
    let e = apply_projection_eps(&d, &ProjectionSpec::new(eps)?)?;
    let e = [apply_heat(&e[0], t)?, apply_heat(&e[1], t)?, apply_heat(&e[2], t)?];
    let lhs = match which {
        NonlinearBound::P32 => norm(&e, q)?,
        _ => norm(&gradient(&e), q)?,
    };
    let nf = norm(f, q)?;
    let ng = norm(g, q)?;
    let ngf = norm(&gradient(f), q)?;
    let ngg = norm(&gradient(g), q)?;
    let min_term = (nf * (ng + ngg)).min((nf + ngf) * ng);
    let rhs = match which {
        NonlinearBound::P32 => t.powf(-0.5) * (min_term + nf * ngg),
        NonlinearBound::P34a => (1.0 / t) * (min_term + nf * ngg),
        NonlinearBound::P34b => t.powf(-0.5) * ngf * (ng + ngg),
    };
    if rhs == 0.0 {
        return Ok(if lhs == 0.0 { None } else { Some(f64::INFINITY) });
    }
    Ok(Some(lhs / rhs))
}

/// Random `div_ε`-free field: a band-limited vector projected by `P_ε`,
/// with the vertical mean of the third component removed (as for a
/// vertical velocity odd in `x3`). Without that, `f3/ε` is unbounded.
pub fn random_div_eps_free(grid: &Grid, seed: u64, eps: f64) -> Result<SpectralVec3> {
    let v = band_limited_vector(grid, seed, &[None, None, None]);
    let f: SpectralVec3 = [v[0].clone(), v[1].clone(), fluctuation_spectral(&v[2])];
    apply_projection_eps(&f, &ProjectionSpec::new(eps)?)
}

pub fn certify_nonlinear_bound(
    which: NonlinearBound,
    eps_grid: &[f64],
    t_grid: &[f64],
    probe: &FieldProbe,
) -> Result<EstimateCertificate> {
    probe.check()?;
    let g = probe.grid()?;
    let pairs: Vec<(f64, f64)> = eps_grid
        .iter()
        .flat_map(|&e| t_grid.iter().map(move |&t| (e, t)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|&(eps, t)| {
            let mut sup: Option<f64> = None;
            for i in 0..probe.trials {
                let f = random_div_eps_free(&g, probe.trial_seed(2 * i), eps)?;
                let h = random_div_eps_free(&g, probe.trial_seed(2 * i + 1), eps)?;
                if let Some(r) = nonlinear_ratio(which, &f, &h, eps, t, probe.q)? {
                    sup = Some(sup.map_or(r, |s: f64| s.max(r)));
                }
            }
            Ok((eps, t, sup))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let mut ratios = Vec::new();
    for (eps, t, sup) in rows {
        // all-zero samples carry no information
        if let Some(r) = sup {
            points.push(ParamPoint {
                eps: Some(eps),
                t: Some(t),
                q: Some(probe.q),
                trials: Some(probe.trials),
                ..ParamPoint::default()
            });
            ratios.push(r);
        }
    }
    let id = match which {
        NonlinearBound::P32 => InequalityId::P32,
        _ => InequalityId::P34,
    };
    let mut c = EstimateCertificate::assemble(id, points, ratios, Some(probe.seed)).judge_uniform();
    c.variant = Some(
        match which {
            NonlinearBound::P32 => "div",
            NonlinearBound::P34a => "grad-t1",
            NonlinearBound::P34b => "grad-t12",
        }
        .into(),
    );
    Ok(c)
}

/// Heat smoothing: `t1^{|a|/2} t2^{|b|/2} ‖∂^a_H ∂3^b e^{t1Δ_H} e^{t2∂3²} f‖ / ‖f‖`
/// with one horizontal and one vertical derivative, `t1 = t2 = t`.
pub fn certify_smoothing(t_grid: &[f64], probe: &FieldProbe) -> Result<EstimateCertificate> {
    probe.check()?;
    let g = probe.grid()?;
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let mut sup = 0.0f64;
            for i in 0..probe.trials {
                let mut rng = ChaCha8Rng::seed_from_u64(probe.trial_seed(i));
                let f = band_limited_with(&g, &mut rng, None);
                let nf = norm(std::slice::from_ref(&f), probe.q)?;
                let e = apply_split_heat(&f, t, t)?.derivative(0, 1).derivative(2, 1);
                let lhs = norm(std::slice::from_ref(&e), probe.q)?;
                sup = sup.max(t * lhs / nf);
            }
            Ok(sup)
        })
        .collect::<Result<Vec<f64>>>()?;
    let points = t_grid
        .iter()
        .map(|&t| ParamPoint {
            t: Some(t),
            q: Some(probe.q),
            p: Some(probe.q),
            trials: Some(probe.trials),
            ..ParamPoint::default()
        })
        .collect();
    Ok(EstimateCertificate::assemble(InequalityId::P21, points, rows, Some(probe.seed))
        .judge_uniform())
}

/// Composite operator: `t^{1/2} ‖e^{tΔ} P_ε ∂_1 f‖ / ‖f‖` over ε and t.
pub fn certify_composite(
    eps_grid: &[f64],
    t_grid: &[f64],
    probe: &FieldProbe,
) -> Result<EstimateCertificate> {
    probe.check()?;
    let g = probe.grid()?;
    let pairs: Vec<(f64, f64)> = eps_grid
        .iter()
        .flat_map(|&e| t_grid.iter().map(move |&t| (e, t)))
        .collect();
    let ratios = pairs
        .par_iter()
        .map(|&(eps, t)| {
            let mut sup = 0.0f64;
            for i in 0..probe.trials {
                let v = band_limited_vector(&g, probe.trial_seed(i), &[None, None, None]);
                let f: SpectralVec3 = [v[0].clone(), v[1].clone(), v[2].clone()];
                let e = composite_heat_proj(&f, t, eps, Deriv::D1)?;
                sup = sup.max(t.sqrt() * norm(&e, probe.q)? / norm(&f, probe.q)?);
            }
            Ok(sup)
        })
        .collect::<Result<Vec<f64>>>()?;
    let points = pairs
        .iter()
        .map(|&(eps, t)| ParamPoint {
            eps: Some(eps),
            t: Some(t),
            q: Some(probe.q),
            p: Some(probe.q),
            trials: Some(probe.trials),
            ..ParamPoint::default()
        })
        .collect();
    Ok(EstimateCertificate::assemble(InequalityId::P23, points, ratios, Some(probe.seed))
        .judge_uniform())
}

// ---------------------------------------------------------------------
// Forcing terms

/// Vertical-integral forcing built from two horizontal fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcingTerm {
    /// `∫ div_H (f·∇_H g)`
    P36Transport,
    /// `∫ div_H ((div_H f) g)`
    P36Divergence,
    /// `∫ div_H ((∫ div_H f) g)`
    P37,
}

/// Scalar third component of the forcing at one time, with `f = g = v`.
///
/// The vertical integral is the periodic antiderivative of the
/// fluctuation; the non-periodic part `(x3 + π)·mean` has no
/// representation on the torus and is dropped.
pub fn forcing_integrand(which: ForcingTerm, state: &HydroState) -> SpectralField {
    let v = &state.v;
    let inner: [SpectralField; 2] = match which {
        ForcingTerm::P36Transport => {
            let c = |j: usize| {
                let mut a = product(&v[0], &v[j].derivative(0, 1));
                a.axpy(1.0, &product(&v[1], &v[j].derivative(1, 1)));
                a
            };
            [c(0), c(1)]
        }
        ForcingTerm::P36Divergence => {
            let d = div_h(v);
            [product(&d, &v[0]), product(&d, &v[1])]
        }
        ForcingTerm::P37 => {
            let a = antiderivative_fluct_spectral(&div_h(v));
            [product(&a, &v[0]), product(&a, &v[1])]
        }
    };
    antiderivative_fluct_spectral(&div_h(&inner))
}

/// `J(t_n) = ∫₀^{t_n} e^{(t_n − s)Δ} h(s) ds` by the composite trapezoid
/// rule on the trajectory's time grid.
pub fn duhamel_trapezoid(h: &[SpectralField], dt: f64) -> Result<Vec<SpectralField>> {
    let first = h
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty forcing history".into()))?;
    let mut out = vec![SpectralField::zeros(first.grid())];
    for n in 1..h.len() {
        let mut carried = out[n - 1].clone();
        carried.axpy(0.5 * dt, &h[n - 1]);
        let mut next = apply_heat(&carried, dt)?;
        next.axpy(0.5 * dt, &h[n]);
        out.push(next);
    }
    Ok(out)
}

/// `sup_t t^{α/2} ‖∇^α ∫₀^t e^{(t−s)Δ} P_ε (0, 0, h(s)) ds‖` per ε.
///
/// `P_ε` commutes with the heat semigroup, so the Duhamel integral is
/// computed once and projected per ε.
pub fn certify_forcing_bound(
    which: ForcingTerm,
    alpha: u8,
    eps_grid: &[f64],
    pe: &Trajectory<HydroState>,
    q: f64,
) -> Result<EstimateCertificate> {
    if alpha > 1 {
        return Err(Error::InvalidArgument(format!("alpha={alpha} must be 0 or 1")));
    }
    let dt = pe.dt * pe.meta.store_every.max(1) as f64;
    let h: Vec<SpectralField> = pe.states.iter().map(|s| forcing_integrand(which, s)).collect();
    let j = duhamel_trapezoid(&h, dt)?;
    let grid = h[0].grid().clone();
    let ratios = eps_grid
        .par_iter()
        .map(|&eps| {
            let spec = ProjectionSpec::new(eps)?;
            let mut sup = 0.0f64;
            for (n, jn) in j.iter().enumerate().skip(1) {
                let t = pe.states[n].time;
                let z = SpectralField::zeros(&grid);
                let p = apply_projection_eps(&[z.clone(), z, jn.clone()], &spec)?;
                let val = if alpha == 0 {
                    norm(&p, q)?
                } else {
                    t.sqrt() * norm(&gradient(&p), q)?
                };
                sup = sup.max(val);
            }
            Ok(sup)
        })
        .collect::<Result<Vec<f64>>>()?;
    let points = eps_grid
        .iter()
        .map(|&e| ParamPoint {
            alpha: Some(alpha as f64),
            eps: Some(e),
            q: Some(q),
            t: pe.states.last().map(|s| s.time),
            ..ParamPoint::default()
        })
        .collect();
    let id = match which {
        ForcingTerm::P37 => InequalityId::P37,
        _ => InequalityId::P36,
    };
    let mut c = EstimateCertificate::assemble(id, points, ratios, None).judge_uniform();
    let term = match which {
        ForcingTerm::P36Transport => "transport",
        ForcingTerm::P36Divergence => "divergence",
        ForcingTerm::P37 => "nested",
    };
    c.variant = Some(format!("{term}-a{alpha}"));
    Ok(c)
}

// ---------------------------------------------------------------------
// Interpolation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentMode {
    /// `(a, b) = (s/2, (1 − s)/2)`
    Paper,
    /// `(a, b) = (s, 1 − s)`
    Corrected,
}

impl ExponentMode {
    pub fn exponents(&self, s: f64) -> (f64, f64) {
        match self {
            ExponentMode::Paper => (s / 2.0, (1.0 - s) / 2.0),
            ExponentMode::Corrected => (s, 1.0 - s),
        }
    }
}

/// `‖∇_H (−Δ)^{−s/2} f‖ / (‖f‖^a ‖∇_H f‖^b)`; the zero mode of `f` is ignored.
pub fn interpolation_ratio(f: &SpectralField, s: f64, mode: ExponentMode, q: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s={s} must lie in (0, 1)")));
    }
    let f0 = f.apply_real_symbol(|k| if k == [0, 0, 0] { 0.0 } else { 1.0 });
    let smoothed = f0.apply_real_symbol(|k| {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(-s / 2.0)
        }
    });
    let lhs = norm(&horizontal_gradient(std::slice::from_ref(&smoothed)), q)?;
    let (a, b) = mode.exponents(s);
    let nf = norm(std::slice::from_ref(&f0), q)?;
    let ng = norm(&horizontal_gradient(std::slice::from_ref(&f0)), q)?;
    let rhs = nf.powf(a) * ng.powf(b);
    if rhs == 0.0 {
        return Ok(if lhs == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(lhs / rhs)
}

/// Randomized interpolation probe. Records the sup ratio per `s` and the
/// homogeneity factor `ratio(2f)/ratio(f)`, which is `2^{1−a−b}`. The
/// verdict asks for finite ratios and a homogeneity factor of 1.
pub fn certify_interpolation(
    s_grid: &[f64],
    mode: ExponentMode,
    probe: &FieldProbe,
) -> Result<EstimateCertificate> {
    probe.check()?;
    let g = probe.grid()?;
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let mut sup = 0.0f64;
            let mut worst_homog = 1.0f64;
            for i in 0..probe.trials {
                let mut rng = ChaCha8Rng::seed_from_u64(probe.trial_seed(i));
                let f = band_limited_with(&g, &mut rng, None);
                let r1 = interpolation_ratio(&f, s, mode, probe.q)?;
                let r2 = interpolation_ratio(&f.scale(2.0), s, mode, probe.q)?;
                sup = sup.max(r1);
                let h = r2 / r1;
                if (h - 1.0).abs() > (worst_homog - 1.0).abs() {
                    worst_homog = h;
                }
            }
            Ok((sup, worst_homog))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let points = s_grid
        .iter()
        .map(|&s| ParamPoint {
            s: Some(s),
            q: Some(probe.q),
            trials: Some(probe.trials),
            ..ParamPoint::default()
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let worst = rows
        .iter()
        .map(|r| r.1)
        .fold(1.0f64, |a, b| if (b - 1.0).abs() > (a - 1.0).abs() { b } else { a });
    let mut c = EstimateCertificate::assemble(InequalityId::Interp, points, ratios, Some(probe.seed));
    let homogeneous = (worst - 1.0).abs() < 1e-9;
    c.verdict = if c.all_finite() && homogeneous {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mode_name = match mode {
        ExponentMode::Paper => "paper",
        ExponentMode::Corrected => "corrected",
    };
    c.variant = Some(mode_name.into());
    c.notes.push(format!("ratio(2f)/ratio(f) = {worst:.12}"));
    Ok(c)
}
