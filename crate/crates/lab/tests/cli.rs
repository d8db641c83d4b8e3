use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lab"));
    c.env_remove("LAB_WORKERS");
    c
}

fn quick(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_into(config: &Path, out: &Path, extra: &[&str]) -> Output {
    lab().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn list_experiments_names_all_five() {
    let o = lab().arg("list-experiments").output().unwrap();
    assert!(o.status.success());
    let s = stdout(&o);
    for name in ["SCORE-SWEEP", "T-DECAY", "MOSER-EXACT", "OSC-CONVERGE", "ODE-VS-SDE"] {
        assert!(s.contains(name), "{name} missing from\n{s}");
    }
}

#[test]
fn passing_run_writes_outputs_and_checks_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = run_into(&quick("score_sweep.toml"), &out, &["--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("[PASS]"));
    for f in ["report.json", "config.effective.toml", "score_sweep.csv", "reference/meta.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let c = lab().arg("check").arg(out.join("report.json")).output().unwrap();
    assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
    assert!(!stdout(&c).contains("[FAIL]"));
}

#[test]
fn failing_verdict_exits_one_for_run_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("decay");
    let o = run_into(&quick("t_decay.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("[FAIL] tail decay rate matches the spectral gap"));
    let c = lab().arg("check").arg(out.join("report.json")).output().unwrap();
    assert_eq!(c.status.code(), Some(1));
}

#[test]
fn check_notices_edited_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    assert_eq!(run_into(&quick("score_sweep.toml"), &out, &[]).status.code(), Some(0));
    // swap two rungs so the errors are no longer decreasing
    let path = out.join("score_sweep.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(1, 2);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let c = lab().arg("check").arg(out.join("report.json")).output().unwrap();
    assert_eq!(c.status.code(), Some(1), "{}", stdout(&c));
}

#[test]
fn invalid_config_exits_two_listing_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "experiment = \"SCORE-SWEEP\"\n[grid]\ndim = 3\ncells = 2\n[solver]\ndt = -1.0\n",
    )
    .unwrap();
    let o = run_into(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("invalid configuration"), "{err}");
    for key in ["grid.dim", "grid.cells", "solver.dt"] {
        assert!(err.contains(key), "{key} not reported in\n{err}");
    }
    assert!(!dir.path().join("out/report.json").exists());
}

#[test]
fn missing_config_exits_two() {
    let o = lab().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("osc");
    let o = run_into(&quick("osc_converge.toml"), &out, &["--seed", "123"]);
    assert!(o.status.code().is_some_and(|c| c < 2), "{}", stdout(&o));
    let echo = std::fs::read_to_string(out.join("config.effective.toml")).unwrap();
    assert!(echo.contains("seed = 123"), "{echo}");
}

#[test]
fn worker_env_and_flag_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = quick("ode_vs_sde.toml");
    let oa = lab()
        .env("LAB_WORKERS", "1")
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    assert_eq!(oa.status.code(), Some(0), "{}", stdout(&oa));
    let ob = run_into(&cfg, &b, &["--workers", "4"]);
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(
        scorelab::golden::csv_digests(&a).unwrap(),
        scorelab::golden::csv_digests(&b).unwrap()
    );
}

#[test]
fn zero_workers_is_rejected() {
    let o = lab().env("LAB_WORKERS", "0").args(["run", "x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
