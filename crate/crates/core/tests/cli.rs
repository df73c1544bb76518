use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tdsync::output::read_csv;

fn tdsync(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdsync"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SYNC_SIM_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn reference_run_writes_documented_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = tdsync(dir.path(), &["-q"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# schema=tdsync-log/1"));
    assert!(lines.next().unwrap().starts_with("t,theta_1,theta_2,theta_dot_1,"));
    // schema comment + header + one row per step
    assert_eq!(csv.lines().count(), 5002);
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("status = completed"));
    assert!(summary.contains("steps = 5000"));
    let resolved = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(resolved.contains("[gains]"));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    assert_eq!(tdsync(&first, &["-q", "--set", "sim.duration=2", "--set", "gains.k_r=0.3"]).status.code(), Some(0));
    let cfg = first.join("config.toml");
    assert_eq!(tdsync(&second, &["-q", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        fs::read(first.join("log.csv")).unwrap(),
        fs::read(second.join("log.csv")).unwrap()
    );
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    fs::write(&cfg, "[sim]\nduration = 1.0\n\n[gains]\nk_r = 0.5\n").unwrap();
    let out = tdsync(dir.path(), &["-q", "--config", cfg.to_str().unwrap(), "--set", "sim.duration=0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let log = read_csv(&fs::read_to_string(dir.path().join("log.csv")).unwrap()).unwrap();
    assert_eq!(log.rows.len(), 50);
}

#[test]
fn invalid_configs_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = tdsync(dir.path(), &["-q", "--set", "bounds.k_m=[-1, 1]"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bounds.k_m[0]"));

    let out = tdsync(dir.path(), &["-q", "--set", "gains.kr=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key `gains.kr`"));

    let out = tdsync(dir.path(), &["-q", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[gains\n").unwrap();
    assert_eq!(tdsync(dir.path(), &["-q", "--config", bad.to_str().unwrap()]).status.code(), Some(1));

    let out = tdsync(dir.path(), &["-q", "--set", "strategies.integrator=rk45"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rk4, rk2, euler"));

    let out = tdsync(dir.path(), &["-q", "--set", "sim.p0=[3.0, 0.0]"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = tdsync(&blocker.join("sub"), &["-q", "--set", "sim.duration=0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let status = Command::new(env!("CARGO_BIN_EXE_tdsync"))
        .args(["-q", "--set", "sim.duration=0.1"])
        .env("SYNC_SIM_OUT", &target)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(target.join("log.csv").is_file());
}

#[test]
fn no_delay_flag_removes_the_lag() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tdsync(dir.path(), &["-q", "--no-delay", "--set", "sim.duration=2"]).status.code(), Some(0));
    let log = read_csv(&fs::read_to_string(dir.path().join("log.csv")).unwrap()).unwrap();
    assert_eq!(log.column("p_h_1"), log.column("p_ht_1"));
    assert_eq!(log.column("p_h_2"), log.column("p_ht_2"));
}

#[test]
fn diagnostics_flag_appends_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tdsync(dir.path(), &["-q", "--diagnostics", "--set", "sim.duration=3"]).status.code(), Some(0));
    let log = read_csv(&fs::read_to_string(dir.path().join("log.csv")).unwrap()).unwrap();
    for c in ["p1_lk", "p2_lk", "p3_lk"] {
        assert!(log.column(c).unwrap().iter().all(|v| *v >= 0.0), "{c}");
    }
    assert!(log.column("skew_residual").unwrap().iter().all(|v| v.abs() < 1e-10));
    // |p_h_dot| = 0.1 on the reference circle, so P3 settles at the closed form
    let p3 = log.column("p3_lk").unwrap();
    assert!((p3.last().unwrap() - 0.5 * 0.5 * 0.01 * 0.45 * 0.45 / 2.0).abs() < 1e-12);
}

#[test]
fn summary_goes_to_stdout_unless_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let out = tdsync(dir.path(), &["--set", "sim.duration=0.1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("status = completed"));
}
