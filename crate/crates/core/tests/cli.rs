use std::path::Path;
use std::process::{Command, Output};

use hydrostat::estimates::read_certificates_csv;
use hydrostat::harness::{read_sweep_csv, SweepReport};

const SMALL: &[&str] = &["--grid", "8", "--T", "0.02", "--dt", "0.01"];

fn hydrostat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrostat"))
        .args(args)
        .output()
        .expect("spawn hydrostat")
}

fn run_ok(args: &[&str]) -> Output {
    let out = hydrostat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn sweep(dir: &Path, extra: &[&str]) {
    let mut args = vec!["diff-sweep", "--out", dir.to_str().unwrap(), "--eps", "0.5,0.25,0.125"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    run_ok(&args);
}

#[test]
fn sweep_outputs_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    sweep(a.path(), &["--jobs", "1"]);
    sweep(b.path(), &["--jobs", "3"]);
    // config.txt records the output directory, so it is not compared
    for name in ["sweep.csv", "sweep.json", "rate.svg"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("eps,sup_V,sup_tgradV,sup_eW,sup_tgradeW,total\n"));
    let rows = read_sweep_csv(csv.as_bytes()).unwrap();
    assert_eq!(rows.iter().map(|r| r.eps).collect::<Vec<_>>(), vec![0.125, 0.25, 0.5]);
    let rep: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("sweep.json")).unwrap()).unwrap();
    assert!(rep.fit.unwrap().slope.is_finite());
    for (row, r) in rows.iter().zip(&rep.rows) {
        assert_eq!(row.total, r.report.as_ref().unwrap().total);
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small run\ngrid = 8\nT = 0.02\ndt = 0.01\neps = 0.5   # single epsilon\nq = inf\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    run_ok(&[
        "diff-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--q",
        "2",
    ]);
    let rep: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(rep.q, 2.0);
    assert_eq!(rep.rows.len(), 1);
    assert!(rep.fit.is_none());
    assert_eq!(rep.dims, vec![8, 8, 8]);
}

#[test]
fn rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let mut args = vec!["diff-sweep", "--out", d, "--eps", "0.1,0.2"];
    args.extend_from_slice(SMALL);
    let out = hydrostat(&args);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("decreasing"));
    let out = hydrostat(&["diff-sweep", "--out", d, "--grid", "8", "--T", "0.1", "--dt", "0.03"]);
    assert!(!out.status.success());
    let out = hydrostat(&["diff-sweep", "--out", d, "--eps", "2"]);
    assert!(!out.status.success());
}

#[test]
fn checkpoint_restart() {
    let dir = tempfile::tempdir().unwrap();
    let pe_dir = dir.path().join("pe");
    let mut args = vec!["simulate-pe", "--out", pe_dir.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    run_ok(&args);
    let chk = pe_dir.join("pe_final.chk");
    assert!(chk.exists());
    assert!(pe_dir.join("pe.csv").exists());
    let preset = format!("checkpoint:{}", chk.display());
    let out = dir.path().join("sweep");
    let mut args = vec!["diff-sweep", "--out", out.to_str().unwrap(), "--eps", "0.5", "--preset", &preset];
    args.extend_from_slice(SMALL);
    run_ok(&args);
    let rep: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert!(rep.rows[0].report.as_ref().unwrap().total > 0.0);

    let nse = dir.path().join("nse");
    let mut args = vec!["simulate-nse", "--out", nse.to_str().unwrap(), "--eps", "0.5,0.25"];
    args.extend_from_slice(SMALL);
    run_ok(&args);
    assert!(nse.join("nse_0.25_final.chk").exists());
    let c = hydrostat::checkpoint::load(&nse.join("nse_0.5_final.chk")).unwrap();
    let s = c.into_scaled().unwrap();
    assert_eq!(s.epsilon, 0.5);
    assert!((s.time - 0.02).abs() < 1e-15);
}

#[test]
fn certify_subset() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "certify",
        "--out",
        dir.path().to_str().unwrap(),
        "--suite",
        "P2.2-1,P2.2-4,REMARK",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("REMARK witness"));
    let cdir = dir.path().join("certificates");
    for f in ["P2.2-1.json", "P2.2-4.json", "remark_witness.json", "summary.json"] {
        assert!(cdir.join(f).exists(), "{f}");
    }
    let rows = read_certificates_csv(std::fs::File::open(cdir.join("certificates.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 9 * 4 * 4);
}

#[test]
fn w_residual_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "w-residual",
        "--out",
        dir.path().to_str().unwrap(),
        "--grid",
        "12",
        "--T",
        "0.05",
        "--dt",
        "0.005",
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("ratio"));
    let js: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("w_residual.json")).unwrap()).unwrap();
    assert!(js["ratio"].as_f64().unwrap() > 3.0);
}
