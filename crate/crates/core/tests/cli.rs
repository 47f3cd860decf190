use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scaffold_gait::csvio::{read_history, TRACE_HEADER};
use scaffold_gait::experiment::{schedule_height, Condition};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scaffold-gait")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_schedule_heights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.cfg");
    fs::write(&cfg, "# short trials\ntrial_duration = 1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = bin(&["run", "--condition", "red", "--iters", "25", "--seed", "7", "--out", s(&out), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_history(&out.join("history.csv")).unwrap();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        assert_eq!(r.support_height_m, schedule_height(Condition::Reducing, r.iteration).unwrap());
    }
    for name in ["metrics.txt", "p3_probe.csv", "trace_iter_1.csv", "trace_iter_25.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn replay_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.txt");
    fs::write(&params, "x0 = 77.99391797172291\nx1 = -0.08307456005155922\nx2 = 0.17227550937265934\nx3 = 0.4861753588049966\nx4 = -0.05160482932681609\n").unwrap();
    let traces: Vec<String> = ["a", "b"]
        .iter()
        .map(|d| {
            let out = dir.path().join(d);
            let o = bin(&["replay", "--params", s(&params), "--height", "0.325", "--duration", "3", "--seed", "4", "--out", s(&out)]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            fs::read_to_string(out.join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0].lines().count(), 302);
}

#[test]
fn analyze_constant_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let mut text = TRACE_HEADER.join(",") + "\n";
    for i in 0..600 {
        text += &format!("{},0.35,0,0,0,0,0,0,0,0,0,0,0\n", i as f64 * 0.01);
    }
    fs::write(&path, text).unwrap();
    let o = bin(&["analyze", "--trace", s(&path)]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("vertical_delta_m = 0\n"), "{stdout}");
    assert!(stdout.contains("dominant_period_s = none"));
    assert!(stdout.contains("mean_fitness = 1\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(bin(&["run", "--condition", "half", "--out", "/tmp/x"]).status.code(), Some(1));
    assert_eq!(bin(&[]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["analyze", "--trace", "/nonexistent/trace.csv"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "kappa = lots\n").unwrap();
    let o = bin(&["run", "--condition", "min", "--out", s(&dir.path().join("o")), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa"));
}

#[test]
fn bench_reports_both_methods() {
    let o = bin(&["bo-bench", "--objective", "quad1d", "--iters", "12", "--seeds", "2"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("bo_within_tol = ") && out.contains("random_within_tol = "));
}
