#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydrostat::harness::{
    run_certify, run_diff_sweep, run_simulate_nse, run_simulate_pe, run_w_residual,
    write_campaign, write_sweep, Mode, RunConfig,
};
use hydrostat::Result;

#[derive(Parser)]
#[command(name = "hydrostat", version, about = "Hydrostatic-limit solvers and estimate certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the primitive equations.
    SimulatePe(Common),
    /// Solve the ε-scaled Navier-Stokes equations for each ε.
    SimulateNse(Common),
    /// Measure the difference norms over ε and fit the rate.
    DiffSweep(Common),
    /// Run the estimate certification suite.
    Certify(Common),
    /// Residual of the reconstructed vertical velocity at dt and dt/2.
    WResidual(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated, strictly decreasing
    #[arg(long)]
    eps: Option<String>,
    /// N (cube) or NxV
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T", id = "T")]
    t_final: Option<f64>,
    /// Integrability exponent, or `inf`
    #[arg(long)]
    q: Option<String>,
    /// default, zero, random or checkpoint:PATH
    #[arg(long)]
    preset: Option<String>,
    /// direct, picard or both
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated ids, REMARK, all or none
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eps0_search: bool,
}

impl Common {
    fn config(&self, mode: Mode) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.mode = mode;
        let mut set = |k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
            Ok(())
        };
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("jobs", self.jobs.map(|x| x.to_string()))?;
        set("seed", self.seed.map(|x| x.to_string()))?;
        set("eps", self.eps.clone())?;
        set("grid", self.grid.clone())?;
        set("dt", self.dt.map(|x| x.to_string()))?;
        set("T", self.t_final.map(|x| x.to_string()))?;
        set("q", self.q.clone())?;
        set("preset", self.preset.clone())?;
        set("method", self.method.clone())?;
        set("suite", self.suite.clone())?;
        set("trials", self.trials.map(|x| x.to_string()))?;
        if self.eps0_search {
            cfg.eps0_search = true;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (mode, common) = match &cli.command {
        Command::SimulatePe(c) => (Mode::SimulatePe, c),
        Command::SimulateNse(c) => (Mode::SimulateNse, c),
        Command::DiffSweep(c) => (Mode::DiffSweep, c),
        Command::Certify(c) => (Mode::Certify, c),
        Command::WResidual(c) => (Mode::WResidual, c),
    };
    let cfg = common.config(mode)?;
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("config.txt"), cfg.render())?;
    match mode {
        Mode::SimulatePe => {
            let meta = run_simulate_pe(&cfg)?;
            println!("pe: dt={}, max defect {:.3e}", meta.step, meta.max_defect);
            Ok(true)
        }
        Mode::SimulateNse => {
            for (eps, meta) in cfg.eps.iter().zip(run_simulate_nse(&cfg)?) {
                println!("eps={eps}: dt={}, max defect {:.3e}", meta.step, meta.max_defect);
            }
            Ok(true)
        }
        Mode::DiffSweep => {
            let rep = run_diff_sweep(&cfg)?;
            write_sweep(&cfg.out, &rep)?;
            for r in &rep.rows {
                match (&r.report, &r.error) {
                    (Some(n), _) => println!(
                        "eps={:<8} total={:.6e} sup_V={:.3e} sup_eW={:.3e}",
                        r.eps, n.total, n.sup_v, n.sup_ew
                    ),
                    (None, Some(e)) => eprintln!("eps={}: {e}", r.eps),
                    _ => {}
                }
            }
            if let Some(f) = rep.fit {
                println!("rate: slope={:.4} r2={:.5}", f.slope, f.r2);
            }
            if let Some(e0) = rep.eps0 {
                println!("largest contracting eps: {e0:.4}");
            }
            match rep.first_error() {
                Some(e) => {
                    eprintln!("error: {e}");
                    Ok(false)
                }
                None => Ok(true),
            }
        }
        Mode::Certify => {
            let rep = run_certify(&cfg)?;
            write_campaign(&cfg.out, &rep)?;
            for c in &rep.certificates {
                println!(
                    "{:<22} {:?} sup_ratio={:.4} eps_growth={}",
                    c.name(),
                    c.verdict,
                    c.sup_ratio,
                    c.eps_growth.map_or("-".into(), |g| format!("{g:.4}"))
                );
            }
            if let Some(w) = &rep.witness {
                println!("REMARK witness slope={:.4} detected={}", w.slope, w.detected);
            }
            for (k, e) in &rep.errors {
                eprintln!("{k}: {e}");
            }
            Ok(rep.errors.is_empty())
        }
        Mode::WResidual => {
            let rep = run_w_residual(&cfg)?;
            println!("w residual ratio (dt vs dt/2): {:.4}", rep.ratio);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
