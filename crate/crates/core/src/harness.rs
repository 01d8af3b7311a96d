//! Batch front-end: run configuration, ε-sweeps with rate fitting,
//! certificate campaigns and report emission.
//!
//! Outputs are byte-for-byte reproducible for a fixed configuration; no
//! timestamps or host data are written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, Checkpoint};
use crate::error::{Error, Result};
use crate::estimates::{
    certify_composite, certify_forcing_bound, certify_integral_suite, certify_interpolation,
    certify_nonlinear_bound, certify_smoothing, certify_sup_bound, nonuniformity_witness,
    write_certificates, EstimateCertificate, ExponentMode, FieldProbe, ForcingTerm, InequalityId,
    NonUniformityWitness, NonlinearBound,
};
use crate::nse::{
    difference_of, fujita_kato_report, largest_contracting_eps, solve_difference_picard,
    solve_scaled_nse_with, FujitaKato, NormReport, PicardOptions,
};
use crate::pe::{
    check_w_equation, default_initial_data, random_admissible_v, reconstruct_w, solve_pe, HVel, HydroState,
    SolverMeta, Trajectory, WResidual,
};
use crate::spectral::{Grid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulatePe,
    SimulateNse,
    DiffSweep,
    Certify,
    WResidual,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate-pe" => Self::SimulatePe,
            "simulate-nse" => Self::SimulateNse,
            "diff-sweep" => Self::DiffSweep,
            "certify" => Self::Certify,
            "w-residual" => Self::WResidual,
            _ => return Err(Error::Config(format!("unknown mode {s:?}"))),
        })
    }
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SimulatePe => "simulate-pe",
            Self::SimulateNse => "simulate-nse",
            Self::DiffSweep => "diff-sweep",
            Self::Certify => "certify",
            Self::WResidual => "w-residual",
        }
    }
}

/// Initial horizontal velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Default,
    Zero,
    /// Random admissible field with the given sup norm, drawn from the run seed.
    Random { amplitude: f64 },
    /// PE state read from a checkpoint; its grid replaces the configured one.
    Checkpoint(PathBuf),
}

impl Preset {
    fn parse(s: &str, amplitude: f64) -> Result<Self> {
        if let Some(p) = s.strip_prefix("checkpoint:") {
            return Ok(Self::Checkpoint(PathBuf::from(p)));
        }
        Ok(match s {
            "default" => Self::Default,
            "zero" => Self::Zero,
            "random" => Self::Random { amplitude },
            _ => return Err(Error::Config(format!("unknown preset {s:?}"))),
        })
    }

    fn render(&self) -> String {
        match self {
            Self::Default => "default".into(),
            Self::Zero => "zero".into(),
            Self::Random { .. } => "random".into(),
            Self::Checkpoint(p) => format!("checkpoint:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMethod {
    /// Scaled NSE solve minus the PE solve.
    Direct,
    /// Picard iteration on the difference system.
    Picard,
    Both,
}

impl FromStr for DiffMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "direct" => Self::Direct,
            "picard" => Self::Picard,
            "both" => Self::Both,
            _ => return Err(Error::Config(format!("unknown method {s:?}"))),
        })
    }
}

impl DiffMethod {
    fn as_str(&self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Picard => "picard",
            Self::Both => "both",
        }
    }
}

/// One entry of a certificate campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SuiteItem {
    Inequality(InequalityId),
    /// Growth witness of the operator excluded from the uniform bounds.
    Remark,
}

impl FromStr for SuiteItem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("remark") {
            return Ok(Self::Remark);
        }
        Ok(Self::Inequality(s.parse()?))
    }
}

impl SuiteItem {
    fn render(&self) -> String {
        match self {
            Self::Inequality(id) => id.to_string(),
            Self::Remark => "REMARK".into(),
        }
    }

    pub fn all() -> Vec<SuiteItem> {
        let mut v: Vec<SuiteItem> = InequalityId::ALL.iter().map(|i| Self::Inequality(*i)).collect();
        v.push(Self::Remark);
        v
    }
}

/// Full run configuration.
///
/// Text form: one `key = value` per line, `#` starts a comment. Keys:
/// `mode`, `n_h`, `n_v` (or `grid = N` / `grid = NxV`), `T`, `dt`, `q`,
/// `eps` (comma list), `preset` (`default`, `zero`, `random`,
/// `checkpoint:PATH`), `amplitude`, `seed`, `out`, `jobs`, `method`
/// (`direct`, `picard`, `both`), `suite` (comma list of ids, `REMARK`,
/// `all` or `none`), `trials`, `eps0_search`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub n_h: usize,
    pub n_v: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub q: f64,
    pub eps: Vec<f64>,
    pub preset: Preset,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub method: DiffMethod,
    pub suite: Vec<SuiteItem>,
    /// Random fields per randomized certificate point (the sup-bound
    /// suite always uses at least 1000).
    pub trials: usize,
    /// Bisect for the largest ε at which Picard still contracts.
    pub eps0_search: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::DiffSweep,
            n_h: 24,
            n_v: 24,
            t_final: 0.5,
            dt: 2.5e-3,
            q: 1.0,
            eps: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            preset: Preset::Default,
            seed: 0,
            out: PathBuf::from("out"),
            jobs: 0,
            method: DiffMethod::Direct,
            suite: SuiteItem::all(),
            trials: 64,
            eps0_search: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// `N` or `NxV`.
pub fn parse_grid(v: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = v.split(['x', 'X']).map(str::trim).collect();
    match parts.as_slice() {
        [n] => {
            let n = parse_num("grid", n)?;
            Ok((n, n))
        }
        [h, v] => Ok((parse_num("grid", h)?, parse_num("grid", v)?)),
        [h1, h2, v] => {
            if h1 != h2 {
                return Err(Error::Config("horizontal sizes must agree".into()));
            }
            Ok((parse_num("grid", h1)?, parse_num("grid", v)?))
        }
        _ => Err(Error::Config(format!("grid: cannot parse {v:?}"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mode" => self.mode = v.parse()?,
            "n_h" => self.n_h = parse_num(key, v)?,
            "n_v" => self.n_v = parse_num(key, v)?,
            "grid" => (self.n_h, self.n_v) = parse_grid(v)?,
            "T" | "t_final" => self.t_final = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "q" => {
                self.q = if v == "inf" {
                    f64::INFINITY
                } else {
                    parse_num(key, v)?
                }
            }
            "eps" => self.eps = parse_list(key, v)?,
            "preset" => {
                let amp = match self.preset {
                    Preset::Random { amplitude } => amplitude,
                    _ => 1.0,
                };
                self.preset = Preset::parse(v, amp)?;
            }
            "amplitude" => {
                let a = parse_num(key, v)?;
                if let Preset::Random { amplitude } = &mut self.preset {
                    *amplitude = a;
                } else {
                    return Err(Error::Config("amplitude needs preset = random first".into()));
                }
            }
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = parse_num(key, v)?,
            "method" => self.method = v.parse()?,
            "suite" => {
                self.suite = match v {
                    "all" => SuiteItem::all(),
                    "none" | "" => Vec::new(),
                    _ => parse_list(key, v)?,
                }
            }
            "trials" => self.trials = parse_num(key, v)?,
            "eps0_search" => self.eps0_search = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Text form accepted by [`RunConfig::parse`].
    pub fn render(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let _ = writeln!(s, "n_h = {}", self.n_h);
        let _ = writeln!(s, "n_v = {}", self.n_v);
        let _ = writeln!(s, "T = {}", self.t_final);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "q = {}", if self.q.is_infinite() { "inf".into() } else { format!("{}", self.q) });
        let _ = writeln!(s, "eps = {}", list(&self.eps));
        let _ = writeln!(s, "preset = {}", self.preset.render());
        if let Preset::Random { amplitude } = self.preset {
            let _ = writeln!(s, "amplitude = {amplitude}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "jobs = {}", self.jobs);
        let _ = writeln!(s, "method = {}", self.method.as_str());
        let suite: Vec<String> = self.suite.iter().map(SuiteItem::render).collect();
        let _ = writeln!(s, "suite = {}", if suite.is_empty() { "none".into() } else { suite.join(",") });
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "eps0_search = {}", self.eps0_search);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::Config(format!("epsilon {e} outside (0, 1]")));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps list must be strictly decreasing".into()));
        }
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(Error::Config("T and dt must be positive".into()));
        }
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > f64::EPSILON * self.t_final {
            return Err(Error::Config(format!(
                "dt={} does not divide T={}",
                self.dt, self.t_final
            )));
        }
        if !(self.q >= 1.0) {
            return Err(Error::Config(format!("q={} must be >= 1", self.q)));
        }
        Grid::new_3d(self.n_h, self.n_v)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new_3d(self.n_h, self.n_v)
    }

    /// Initial horizontal velocity on the configured (or checkpoint) grid.
    pub fn initial_v(&self) -> Result<HVel> {
        match &self.preset {
            Preset::Default => default_initial_data(&self.grid()?),
            Preset::Zero => {
                let g = self.grid()?;
                Ok([SpectralField::zeros(&g), SpectralField::zeros(&g)])
            }
            Preset::Random { amplitude } => {
                Ok(random_admissible_v(&self.grid()?, self.seed, *amplitude))
            }
            Preset::Checkpoint(p) => Ok(checkpoint::load(p)?.into_hydro()?.v),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

// ---------------------------------------------------------------------
// Rate fitting

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `ln value` against `ln ε`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument("rate fit needs at least two points".into()));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs positive values, got ({}, {})",
            p.0, p.1
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct epsilons".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r2,
    })
}

// ---------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub method: DiffMethod,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<NormReport>,
    /// Picard only: iterations and final update.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub picard_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub picard_log_slope: Option<f64>,
    /// Relative gap between the Picard and direct totals (method `both`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cross_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_div_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub dims: Vec<usize>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub q: f64,
    pub preset: Preset,
    /// Rows sorted by increasing ε.
    pub rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<RateFit>,
    pub pe_meta: SolverMeta,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps0: Option<f64>,
}

impl SweepReport {
    /// The first failed ε as an annotated error.
    pub fn first_error(&self) -> Option<Error> {
        self.rows.iter().find_map(|r| {
            r.error.as_ref().map(|m| Error::AtEpsilon {
                eps: r.eps,
                source: Box::new(Error::Precondition(m.clone())),
            })
        })
    }

    /// `(ε, total)` of the successful rows.
    pub fn totals(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.report.as_ref().map(|rep| (r.eps, rep.total)))
            .collect()
    }
}

fn direct_report(pe: &Trajectory<HydroState>, v0: &HVel, eps: f64, cfg: &RunConfig) -> Result<(NormReport, f64)> {
    let w0 = reconstruct_w(v0)?;
    let mut acc = FujitaKato::new(eps, cfg.q);
    let mut n = 0usize;
    let meta = solve_scaled_nse_with(v0, &w0, eps, cfg.t_final, cfg.dt, |s| {
        let d = difference_of(s, &pe.states[n])?;
        n += 1;
        acc.push(&d)
    })?;
    Ok((acc.finish(), meta.max_defect))
}

fn sweep_row(pe: &Trajectory<HydroState>, v0: &HVel, eps: f64, cfg: &RunConfig) -> SweepRow {
    let mut row = SweepRow {
        eps,
        method: cfg.method,
        report: None,
        picard_iterations: None,
        picard_log_slope: None,
        cross_gap: None,
        max_div_defect: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let mut direct_total = None;
        if matches!(cfg.method, DiffMethod::Direct | DiffMethod::Both) {
            let (rep, defect) = direct_report(pe, v0, eps, cfg)?;
            direct_total = Some(rep.total);
            row.max_div_defect = Some(defect);
            row.report = Some(rep);
        }
        if matches!(cfg.method, DiffMethod::Picard | DiffMethod::Both) {
            let pic = solve_difference_picard(pe, eps, &PicardOptions::default())?;
            if !pic.converged {
                return Err(Error::Precondition(format!(
                    "Picard did not converge in {} iterations",
                    pic.updates.len()
                )));
            }
            let rep = fujita_kato_report(&pic.trajectory, cfg.q)?;
            row.picard_iterations = Some(pic.updates.len());
            row.picard_log_slope = pic.log_slope;
            if let Some(d) = direct_total {
                row.cross_gap = Some(if d == 0.0 { 0.0 } else { (rep.total - d).abs() / d });
            } else {
                row.max_div_defect = Some(pic.trajectory.meta.max_defect);
                row.report = Some(rep);
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
        row.report = None;
    }
    row
}

/// Solves the PE once, then every ε of the configuration in the worker
/// pool. Failed ε are kept as rows carrying the error message.
pub fn run_diff_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let v0 = cfg.initial_v()?;
    let pe = solve_pe(&v0, cfg.t_final, cfg.dt)?;
    let pool = cfg.pool()?;
    let mut rows: Vec<SweepRow> =
        pool.install(|| cfg.eps.par_iter().map(|&e| sweep_row(&pe, &v0, e, cfg)).collect());
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.report.as_ref().map(|rep| (r.eps, rep.total)))
        .collect();
    // all-zero or single-ε sweeps have no rate
    let fit = if pairs.len() >= 2 && pairs.iter().all(|p| p.1 > 0.0) {
        Some(fit_rate(&pairs)?)
    } else {
        None
    };
    let eps0 = if cfg.eps0_search && !cfg.eps.is_empty() {
        let lo = cfg.eps.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cfg.eps.iter().copied().fold(0.0, f64::max);
        pool.install(|| largest_contracting_eps(&pe, lo, hi, 6, &PicardOptions::default()))?
    } else {
        None
    };
    Ok(SweepReport {
        dims: pe.meta.dims.clone(),
        t_final: cfg.t_final,
        dt: cfg.dt,
        q: cfg.q,
        preset: cfg.preset.clone(),
        rows,
        fit,
        pe_meta: pe.meta.clone(),
        eps0,
    })
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub eps: f64,
    #[serde(rename = "sup_V")]
    pub sup_v: f64,
    #[serde(rename = "sup_tgradV")]
    pub sup_tgrad_v: f64,
    #[serde(rename = "sup_eW")]
    pub sup_ew: f64,
    #[serde(rename = "sup_tgradeW")]
    pub sup_tgrad_ew: f64,
    pub total: f64,
}

pub fn sweep_csv_rows(report: &SweepReport) -> Vec<SweepCsvRow> {
    report
        .rows
        .iter()
        .filter_map(|r| {
            r.report.as_ref().map(|p| SweepCsvRow {
                eps: r.eps,
                sup_v: p.sup_v,
                sup_tgrad_v: p.sup_tgrad_v,
                sup_ew: p.sup_ew,
                sup_tgrad_ew: p.sup_tgrad_ew,
                total: p.total,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(out: W, report: &SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in sweep_csv_rows(report) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepCsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes `sweep.csv`, `sweep.json` and `rate.svg` into `dir`.
pub fn write_sweep(dir: &Path, report: &SweepReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_sweep_csv(std::fs::File::create(dir.join("sweep.csv"))?, report)?;
    std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(report)? + "\n")?;
    std::fs::write(dir.join("rate.svg"), rate_svg(&report.totals(), report.fit.as_ref()))?;
    Ok(())
}

// ---------------------------------------------------------------------
// SVG

/// Log-log plot of `(ε, value)` with the fitted line.
pub fn rate_svg(points: &[(f64, f64)], fit: Option<&RateFit>) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const M: f64 = 56.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.log10(), p.1.log10()))
        .collect();
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2}" fill="none" stroke="black"/>"#,
        px(x0),
        py(y1),
        px(x0),
        py(y0),
        px(x1),
        py(y0)
    );
    for d in (x0 as i64)..=(x1 as i64) {
        let x = px(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">1e{d}</text>"#,
            py(y0),
            py(y0) + 5.0,
            py(y0) + 18.0
        );
    }
    for d in (y0 as i64)..=(y1 as i64) {
        let y = py(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{d}</text>"#,
            px(x0) - 5.0,
            px(x0),
            px(x0) - 8.0,
            y + 4.0
        );
    }
    if let Some(f) = fit {
        let ln10 = std::f64::consts::LN_10;
        let line = |x: f64| (f.intercept + f.slope * x * ln10) / ln10;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-dasharray="6 4"/>"#,
            px(x0),
            py(line(x0)),
            px(x1),
            py(line(x1))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">slope {:.3}, r² {:.4}</text>"#,
            M + 8.0,
            M - 16.0,
            f.slope,
            f.r2
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="firebrick"/>"#,
            px(x),
            py(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">epsilon</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">Fujita-Kato total</text>"#,
        H / 2.0,
        H / 2.0
    );
    s.push_str("</svg>\n");
    s
}

// ---------------------------------------------------------------------
// Certificate campaign

/// Default grids of the integral-inequality campaign.
pub const PROP22_ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];
pub const PROP22_BETAS: [f64; 3] = [0.25, 0.5, 0.75];
pub const PROP22_TIMES: [f64; 4] = [1e-2, 1e-1, 1.0, 10.0];
pub const PROP22_EPS: [f64; 4] = [1.0, 1e-1, 1e-2, 1e-3];
/// Witness time, small enough that `ε² ≳ t` over three decades of ε.
pub const WITNESS_T: f64 = 1e-7;
pub const SUP_BOUND_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub certificates: Vec<EstimateCertificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<NonUniformityWitness>,
    /// Suite items that failed to run, with the error.
    pub errors: BTreeMap<String, String>,
}

fn certify_item(
    item: SuiteItem,
    cfg: &RunConfig,
    pe: &dyn Fn() -> Result<Trajectory<HydroState>>,
) -> Result<(Vec<EstimateCertificate>, Option<NonUniformityWitness>)> {
    let probe = FieldProbe {
        n_h: 16,
        n_v: 16,
        trials: cfg.trials.max(1),
        seed: cfg.seed,
        q: cfg.q,
    };
    let eps_fields = [1.0, 0.3, 0.1, 0.03];
    let t_fields = [0.01, 0.1, 1.0];
    let id = match item {
        SuiteItem::Remark => {
            return Ok((vec![], Some(nonuniformity_witness(&PROP22_EPS, WITNESS_T)?)));
        }
        SuiteItem::Inequality(id) => id,
    };
    let certs = match id {
        InequalityId::P22a | InequalityId::P22b | InequalityId::P22c | InequalityId::P22d => {
            vec![certify_integral_suite(id, &PROP22_ALPHAS, &PROP22_BETAS, &PROP22_EPS, &PROP22_TIMES)?]
        }
        InequalityId::P21 => vec![certify_smoothing(&t_fields, &probe)?],
        InequalityId::P23 => vec![certify_composite(&eps_fields, &t_fields, &probe)?],
        InequalityId::P31 => vec![certify_sup_bound(&FieldProbe {
            trials: cfg.trials.max(SUP_BOUND_TRIALS),
            ..probe
        })?],
        InequalityId::P32 => vec![certify_nonlinear_bound(NonlinearBound::P32, &eps_fields, &t_fields, &probe)?],
        InequalityId::P34 => vec![
            certify_nonlinear_bound(NonlinearBound::P34a, &eps_fields, &t_fields, &probe)?,
            certify_nonlinear_bound(NonlinearBound::P34b, &eps_fields, &t_fields, &probe)?,
        ],
        InequalityId::P36 | InequalityId::P37 => {
            let traj = pe()?;
            let terms: &[ForcingTerm] = if id == InequalityId::P36 {
                &[ForcingTerm::P36Transport, ForcingTerm::P36Divergence]
            } else {
                &[ForcingTerm::P37]
            };
            let mut out = Vec::new();
            for &term in terms {
                for alpha in [0u8, 1] {
                    out.push(certify_forcing_bound(term, alpha, &[1.0, 0.1, 0.01], &traj, cfg.q)?);
                }
            }
            out
        }
        InequalityId::Interp => vec![
            certify_interpolation(&[0.25, 0.5, 0.75], ExponentMode::Paper, &probe)?,
            certify_interpolation(&[0.25, 0.5, 0.75], ExponentMode::Corrected, &probe)?,
        ],
    };
    Ok((certs, None))
}

/// Runs the configured suite. Items that error are recorded in
/// [`CampaignReport::errors`] and the rest still run.
pub fn run_certify(cfg: &RunConfig) -> Result<CampaignReport> {
    let pool = cfg.pool()?;
    let needs_pe = cfg
        .suite
        .iter()
        .any(|s| matches!(s, SuiteItem::Inequality(InequalityId::P36 | InequalityId::P37)));
    let pe_traj = if needs_pe {
        cfg.validate()?;
        Some(solve_pe(&cfg.initial_v()?, cfg.t_final, cfg.dt))
    } else {
        None
    };
    let pe = || -> Result<Trajectory<HydroState>> {
        match &pe_traj {
            Some(Ok(t)) => Ok(t.clone()),
            Some(Err(e)) => Err(Error::Precondition(format!("PE solve failed: {e}"))),
            None => Err(Error::Precondition("no PE trajectory".into())),
        }
    };
    let mut items = cfg.suite.clone();
    items.sort();
    items.dedup();
    let results: Vec<(SuiteItem, Result<_>)> =
        pool.install(|| items.iter().map(|&it| (it, certify_item(it, cfg, &pe))).collect());
    let mut report = CampaignReport {
        certificates: Vec::new(),
        witness: None,
        errors: BTreeMap::new(),
    };
    for (item, r) in results {
        match r {
            Ok((certs, w)) => {
                report.certificates.extend(certs);
                if w.is_some() {
                    report.witness = w;
                }
            }
            Err(e) => {
                report.errors.insert(item.render(), e.to_string());
            }
        }
    }
    Ok(report)
}

/// Writes `certificates/*.json`, `certificates/certificates.csv`, the
/// witness and a summary.
pub fn write_campaign(dir: &Path, report: &CampaignReport) -> Result<()> {
    let cdir = dir.join("certificates");
    write_certificates(&cdir, &report.certificates)?;
    if let Some(w) = &report.witness {
        std::fs::write(cdir.join("remark_witness.json"), serde_json::to_string_pretty(w)? + "\n")?;
    }
    let summary: BTreeMap<String, String> = report
        .certificates
        .iter()
        .map(|c| (c.name(), format!("{:?}", c.verdict).to_lowercase()))
        .collect();
    let js = serde_json::json!({ "verdicts": summary, "errors": report.errors });
    std::fs::write(cdir.join("summary.json"), serde_json::to_string_pretty(&js)? + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------
// Simulations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub t: f64,
    pub sup_v: f64,
    pub sup_w: f64,
    pub energy: f64,
}

fn time_row(t: f64, v: &[SpectralField; 2], w: &SpectralField) -> TimeRow {
    TimeRow {
        t,
        sup_v: v[0].inverse().max_abs().max(v[1].inverse().max_abs()),
        sup_w: w.inverse().max_abs(),
        energy: v[0].energy() + v[1].energy(),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Solves the PE, writing `pe.csv` and the final state as `pe_final.chk`.
pub fn run_simulate_pe(cfg: &RunConfig) -> Result<SolverMeta> {
    cfg.validate()?;
    let pe = solve_pe(&cfg.initial_v()?, cfg.t_final, cfg.dt)?;
    std::fs::create_dir_all(&cfg.out)?;
    let rows: Vec<TimeRow> = pe.states.iter().map(|s| time_row(s.time, &s.v, &s.w)).collect();
    write_rows(&cfg.out.join("pe.csv"), &rows)?;
    if let Some(last) = pe.states.last() {
        checkpoint::save(&cfg.out.join("pe_final.chk"), &Checkpoint::from(last))?;
    }
    std::fs::write(cfg.out.join("pe_meta.json"), serde_json::to_string_pretty(&pe.meta)? + "\n")?;
    Ok(pe.meta)
}

/// Solves the scaled equations for every ε, writing `nse_<ε>.csv` and
/// `nse_<ε>_final.chk`.
pub fn run_simulate_nse(cfg: &RunConfig) -> Result<Vec<SolverMeta>> {
    cfg.validate()?;
    let v0 = cfg.initial_v()?;
    let w0 = reconstruct_w(&v0)?;
    std::fs::create_dir_all(&cfg.out)?;
    let pool = cfg.pool()?;
    pool.install(|| {
        cfg.eps
            .par_iter()
            .map(|&eps| {
                let mut rows = Vec::new();
                let mut last = None;
                let meta = solve_scaled_nse_with(&v0, &w0, eps, cfg.t_final, cfg.dt, |s| {
                    rows.push(time_row(s.time, &[s.u[0].clone(), s.u[1].clone()], &s.w()));
                    last = Some(s.clone());
                    Ok(())
                })
                .map_err(|e| Error::AtEpsilon {
                    eps,
                    source: Box::new(e),
                })?;
                write_rows(&cfg.out.join(format!("nse_{eps}.csv")), &rows)?;
                if let Some(s) = &last {
                    checkpoint::save(&cfg.out.join(format!("nse_{eps}_final.chk")), &Checkpoint::from(s))?;
                }
                Ok(meta)
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WResidualReport {
    pub dt: f64,
    pub coarse: WResidual,
    pub fine: WResidual,
    /// Ratio of the coarse to the fine maximal residual at common times.
    pub ratio: f64,
}

/// Residual of the `w` equation at `dt` and `dt/2`.
pub fn run_w_residual(cfg: &RunConfig) -> Result<WResidualReport> {
    cfg.validate()?;
    let v0 = cfg.initial_v()?;
    let (coarse, fine) = rayon::join(
        || solve_pe(&v0, cfg.t_final, cfg.dt).and_then(|t| check_w_equation(&t)),
        || solve_pe(&v0, cfg.t_final, cfg.dt / 2.0).and_then(|t| check_w_equation(&t)),
    );
    let (coarse, fine) = (coarse?, fine?);
    // fine interior times 2h, 4h, ... coincide with coarse ones
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (i, &c) in coarse.max_residual.iter().enumerate() {
        let j = 2 * i + 1;
        if let Some(&f) = fine.max_residual.get(j) {
            num = num.max(c);
            den = den.max(f);
        }
    }
    let ratio = if den == 0.0 { f64::INFINITY } else { num / den };
    let rep = WResidualReport {
        dt: cfg.dt,
        coarse,
        fine,
        ratio,
    };
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("w_residual.json"), serde_json::to_string_pretty(&rep)? + "\n")?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_examples() {
        let e = [0.4, 0.2, 0.1, 0.05];
        let lin: Vec<(f64, f64)> = e.iter().map(|&x| (x, 3.0 * x)).collect();
        let f = fit_rate(&lin).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let quad: Vec<(f64, f64)> = e.iter().map(|&x| (x, 0.5 * x * x)).collect();
        assert!((fit_rate(&quad).unwrap().slope - 2.0).abs() < 1e-12);
        assert!(fit_rate(&[(0.1, 1.0)]).is_err());
        assert!(fit_rate(&[(0.1, 1.0), (0.2, 0.0)]).is_err());
        assert!(fit_rate(&[(0.1, 1.0), (0.2, -1.0)]).is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let text = "# sweep\nmode = diff-sweep\ngrid = 16x12\nT = 0.1\ndt = 0.01\neps = 0.5, 0.25\npreset = random\namplitude = 0.3\nseed = 7\nsuite = P2.2-1,REMARK\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!((cfg.n_h, cfg.n_v), (16, 12));
        assert_eq!(cfg.eps, vec![0.5, 0.25]);
        assert_eq!(cfg.preset, Preset::Random { amplitude: 0.3 });
        assert_eq!(cfg.suite, vec![SuiteItem::Inequality(InequalityId::P22a), SuiteItem::Remark]);
        let again = RunConfig::parse(&cfg.render()).unwrap();
        assert_eq!(again, cfg);
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.eps = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());
        cfg.eps = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.eps = vec![0.5];
        cfg.dt = 0.3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_data_sweep() {
        let cfg = RunConfig {
            n_h: 8,
            n_v: 8,
            t_final: 0.02,
            dt: 0.01,
            preset: Preset::Zero,
            eps: vec![0.5, 0.25],
            ..RunConfig::default()
        };
        let rep = run_diff_sweep(&cfg).unwrap();
        assert!(rep.fit.is_none());
        assert!(rep.rows.iter().all(|r| r.report.as_ref().unwrap().total == 0.0));
        assert!(rep.rows[0].eps < rep.rows[1].eps);
    }

    #[test]
    fn single_eps_has_no_rate() {
        let cfg = RunConfig {
            n_h: 8,
            n_v: 8,
            t_final: 0.02,
            dt: 0.01,
            eps: vec![0.5],
            ..RunConfig::default()
        };
        let rep = run_diff_sweep(&cfg).unwrap();
        assert!(rep.fit.is_none());
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.rows[0].report.as_ref().unwrap().total > 0.0);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("eps,sup_V,sup_tgradV,sup_eW,sup_tgradeW,total\n"));
        assert_eq!(read_sweep_csv(buf.as_slice()).unwrap(), sweep_csv_rows(&rep));
    }

    #[test]
    fn empty_suite() {
        let cfg = RunConfig {
            suite: vec![],
            ..RunConfig::default()
        };
        let rep = run_certify(&cfg).unwrap();
        assert!(rep.certificates.is_empty() && rep.errors.is_empty());
    }

    #[test]
    fn svg_is_well_formed() {
        let pts = [(0.4, 0.04), (0.2, 0.02), (0.1, 0.01)];
        let fit = fit_rate(&pts).unwrap();
        let s = rate_svg(&pts, Some(&fit));
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 3);
        assert!(rate_svg(&[], None).contains("no data"));
    }
}
