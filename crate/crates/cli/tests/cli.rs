use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bifcurrents"));
    c.env_remove("BIFCURRENTS_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn power_map_estimates_agree_with_log_d() {
    let o = run(&["lyapunov", "--map", "builtin:power(d=3)", "--method", "all", "--samples", "20000", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ln3 = 3f64.ln();
    assert!((v["closed"]["value"].as_f64().unwrap() - ln3).abs() < 1e-10);
    assert!((v["ergodic"]["value"].as_f64().unwrap() - ln3).abs() < 1e-8);
    assert!((v["cycles"]["value"].as_f64().unwrap() - ln3).abs() < 1e-8);
    let integral = &v["integral"]["via_fubini_study"];
    let se = integral["stderr"].as_f64().unwrap();
    assert!((integral["value"].as_f64().unwrap() - ln3).abs() < 1e-2f64.max(3.0 * se));
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = |threads: &str, out: &str| {
        vec![
            "--threads".to_string(),
            threads.to_string(),
            "scan".into(),
            "--family".into(),
            "quadratic".into(),
            "--box=-2.5:1.5:-2:2".into(),
            "--res".into(),
            "24x20".into(),
            "--method".into(),
            "ergodic".into(),
            "--samples".into(),
            "500".into(),
            "--seed".into(),
            "9".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let (a, b, c) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"), path(dir.path(), "c.csv"));
    for (t, out) in [("1", &a), ("3", &b), ("1", &c)] {
        let o = bin().args(args(t, out)).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |p: &str| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&a), read(&c));
}

#[test]
fn render_drops_the_masked_border() {
    let dir = tempfile::tempdir().unwrap();
    let (field, mass, pgm) = (path(dir.path(), "f.csv"), path(dir.path(), "m.csv"), path(dir.path(), "m.pgm"));
    assert!(run(&["scan", "--family", "quadratic", "--box=-2.5:1.5:-2:2", "--res", "30x26", "--out", &field]).status.success());
    assert!(run(&["ddc", "--in", &field, "--out", &mass]).status.success());
    let o = run(&["render", "--in", &mass, "--out", &pgm, "--map", "log", "--floor", "1e-9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = std::fs::read(&pgm).unwrap();
    let header = String::from_utf8_lossy(&bytes[..16]).to_string();
    let mut words = header.split_whitespace();
    assert_eq!(words.next(), Some("P5"));
    assert_eq!(words.next(), Some("28"));
    assert_eq!(words.next(), Some("24"));
    let maxval: usize = words.next().unwrap().parse().unwrap();
    let header_len = header.find(&format!("\n{maxval}\n")).unwrap() + maxval.to_string().len() + 2;
    let depth = if maxval > 255 { 2 } else { 1 };
    assert_eq!(bytes.len() - header_len, 28 * 24 * depth);
    assert!(std::fs::read_to_string(format!("{pgm}.txt")).unwrap().contains("convention"));
}

#[test]
fn cache_hit_reproduces_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cache = path(dir.path(), "cache");
    let out = path(dir.path(), "f.csv");
    let go = || {
        bin()
            .env("BIFCURRENTS_CACHE", &cache)
            .args(["scan", "--family", "quadratic", "--box=-2:0.5:-1:1", "--res", "12x10", "--out", &out])
            .output()
            .unwrap()
    };
    let first = go();
    assert!(stderr(&first).contains("cache=store"), "{}", stderr(&first));
    let bytes = std::fs::read(&out).unwrap();
    std::fs::remove_file(&out).unwrap();
    let second = go();
    assert!(stderr(&second).contains("cache=hit"), "{}", stderr(&second));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(bytes, std::fs::read(&out).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.cfg");
    std::fs::write(&cfg, "# green value\ncommand = green\nmap = builtin:power(d=2)\npoint = 3+0i\n").unwrap();
    let from_file = run(&["green", "--config", &cfg]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    // g = log max|z_j| − log‖z‖ for the power map
    let value = |o: &Output| -> f64 { stdout(o).lines().next().unwrap().strip_prefix("value ").unwrap().parse().unwrap() };
    assert!((value(&from_file) - (3.0 / 10f64.sqrt()).ln()).abs() < 1e-12);
    let overridden = run(&["green", "--config", &cfg, "--point", "5+0i"]);
    assert!((value(&overridden) - (5.0 / 26f64.sqrt()).ln()).abs() < 1e-12);
    std::fs::write(&cfg, "command = scan\n").unwrap();
    assert_eq!(run(&["green", "--config", &cfg, "--map", "builtin:power(d=2)", "--point", "1"]).status.code(), Some(2));
}

#[test]
fn invalid_input_exits_with_2() {
    for args in [
        vec!["lyapunov", "--map", "builtin:power(d=1)"],
        vec!["scan", "--family", "quadratic", "--box=1:0:0:1", "--res", "4x4", "--out", "/tmp/never.csv"],
        vec!["lyapunov", "--map", "builtin:power(d=2)", "--bogus", "1"],
        vec!["verify", "--level", "medium"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).lines().any(|l| l.starts_with("ERROR kind=validation")), "{}", stderr(&o));
    }
}

#[test]
fn degenerate_map_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let map = path(dir.path(), "f.map");
    // (z² − z) / (z² − 1) shares the root z = 1
    std::fs::write(&map, "degree 2\nP: 0 -1 1\nQ: -1 0 1\n").unwrap();
    let o = run(&["lyapunov", "--map", &map, "--method", "closed"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("ERROR kind=validation key=map"));
}

#[test]
fn verify_report_lists_requested_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "report.json");
    let o = run(&["verify", "--level", "quick", "--only", "1,2", "--json", &report]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("criterion  1 PASS"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let ids: Vec<u64> = v["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [1, 2]);
    assert_eq!(v["passed"], true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cached_and_fresh_runs_match(n in 3usize..9, x in -2.0..1.0f64, seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let cache = path(dir.path(), "cache");
        let bx = format!("--box={x}:{}:-0.5:0.5", x + 1.0);
        let res = format!("{n}x{n}");
        let seed = seed.to_string();
        let args = ["lyapunov", "--map", "builtin:quadratic(c=-1)", "--method", "ergodic", "--samples", "300", "--seed", &seed];
        let fresh = run(&args);
        let cached = |_: ()| bin().env("BIFCURRENTS_CACHE", &cache).args(args).output().unwrap();
        let (a, b) = (cached(()), cached(()));
        prop_assert_eq!(&fresh.stdout, &a.stdout);
        prop_assert_eq!(&a.stdout, &b.stdout);
        let scan = |out: &str| {
            bin().env("BIFCURRENTS_CACHE", &cache)
                .args(["scan", "--family", "quadratic", &bx, "--res", &res, "--out", out])
                .output()
                .unwrap()
        };
        let (p, q) = (path(dir.path(), "p.csv"), path(dir.path(), "q.csv"));
        prop_assert!(scan(&p).status.success());
        let hit = scan(&q);
        prop_assert!(stderr(&hit).contains("cache=hit"));
        prop_assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    }
}
