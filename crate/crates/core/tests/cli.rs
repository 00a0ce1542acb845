//! Exit codes and outputs of the command-line front end.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_adaptive-filter"));
    c.current_dir(env!("CARGO_MANIFEST_DIR"));
    c
}

#[test]
fn missing_chain_is_an_input_error() {
    let out = bin().args(["backtest", "--chain", "does/not/exist.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_then_vol_report() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let out = bin()
        .args(["simulate", "--config", "data/sample_config.toml", "--steps", "30", "--out-dir"])
        .arg(&sim)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(sim.join("chain.csv").exists() && sim.join("truth.csv").exists());

    let rep = dir.path().join("rep");
    let mut cfg = std::fs::read_to_string("data/sample_config.toml").unwrap();
    cfg = cfg.replace("n_particles = 500", "n_particles = 100").replace("n_particles = 2000", "n_particles = 300");
    let cfg_path = dir.path().join("fast.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = bin()
        .args(["backtest", "--strategy", "EKF", "--strike", "2500", "--config"])
        .arg(&cfg_path)
        .arg("--chain")
        .arg(sim.join("chain.csv"))
        .arg("--out-dir")
        .arg(&rep)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let vix = dir.path().join("vix.csv");
    std::fs::write(&vix, "date,value\n2019-06-05,0.15\n1999-01-01,0.2\n").unwrap();
    let out = bin()
        .args(["vol-report", "--records"])
        .arg(rep.join("decisions.csv"))
        .arg("--compare")
        .arg(format!("VIX={}", vix.display()))
        .arg("--out-dir")
        .arg(&rep)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let joined = std::fs::read_to_string(rep.join("vol_comparison.csv")).unwrap();
    assert_eq!(joined.lines().count(), 2);
    let unmatched = std::fs::read_to_string(rep.join("vol_unmatched.csv")).unwrap();
    assert!(unmatched.contains("1999-01-01,estimate"));
}

#[test]
fn calibrate_garch_writes_config() {
    let dir = tempfile::tempdir().unwrap();
    let truth = Path::new("data/sample_truth.csv");
    let closes: String = std::fs::read_to_string(truth)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{}\n", f[0], f[1])
        })
        .collect();
    let und = dir.path().join("spx.csv");
    std::fs::write(&und, format!("date,close\n{closes}")).unwrap();
    let out_cfg = dir.path().join("fitted.toml");
    let out = bin().args(["calibrate-garch", "--underlying"]).arg(&und).arg("--config-out").arg(&out_cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = adaptive_filter::config::Config::load(&out_cfg).unwrap();
    assert!(cfg.garch.alpha + cfg.garch.beta < 1.0);
}
