use std::path::Path;
use std::process::{Command, Output};

fn klmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klmc")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let r = klmc(&["sample", "--n", "4", "--steps", "50", "--chains", "2", "--record-every", "10", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("chain,step,time,x11,xi_norm2,energy"));
    // steps 0, 10, ..., 50 for each chain
    assert_eq!(lines.count(), 12);
}

#[test]
fn config_file_merges_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nn = 4\nsteps = 20\nchains = 1\nrecord_every = 20\n").unwrap();
    let out = dir.path().join("s.csv");
    let r = klmc(&["--config", path_str(&cfg), "sample", "--steps", "40", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let steps: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(steps, ["0", "20", "40"]);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = path_str(&out);
    assert_eq!(code(&klmc(&["sample", "--n", "1", "--out", o])), 2);
    assert_eq!(code(&klmc(&["sample", "--potential", "nope", "--out", o])), 2);
    assert_eq!(code(&klmc(&["sample", "--h", "0", "--out", o])), 2);
    assert_eq!(code(&klmc(&["theory", "--L", "1", "--D", "4", "--gamma", "0"])), 2);
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&klmc(&["--config", path_str(&cfg), "sample", "--out", o])), 2);
    assert_eq!(code(&klmc(&["--config", "/nonexistent/klmc.cfg", "sample", "--out", o])), 2);
}

#[test]
fn inconsistent_theory_exits_3() {
    // At this friction the chosen rate leaves ψ below one half.
    let r = klmc(&["theory", "--L", "1", "--D", "4.442882938158366", "--gamma", "3", "--C", "0.7071067811865476", "--m", "3"]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn theory_report_lists_constants() {
    let r = klmc(&["theory", "--L", "1", "--D", "4.442882938158366", "--gamma", "1", "--C", "0.7071067811865476", "--m", "3"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    let keys: Vec<&str> = text.lines().map(|l| l.split_once('=').unwrap().0).collect();
    for k in ["L", "D", "gamma", "theta", "alpha", "beta", "R", "c_star", "Lambda", "C_rho", "A1", "A2", "bias"] {
        assert!(keys.contains(&k), "missing {k}");
    }
    let c_star: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("c_star="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(c_star > 0.0 && c_star <= 0.25);
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("o{i}.csv"));
        let r = klmc(&["oracle", "--n", "5", "--count", "50", "--mode", "rejection", "--potential", "x11sq:a=5", "--seed", "3", "--out", path_str(&out)]);
        assert_eq!(code(&r), 0);
        outs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}
