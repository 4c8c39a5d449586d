use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-mask"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn verify_moments_passes_and_summary_matches_schema() {
    let dir = TempDir::new().unwrap();
    let out = run(&["verify", "--suites", "moments"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema("summary.schema.json")).unwrap();
    assert!(validator.is_valid(&summary));
    let suite = &summary["suites"][0];
    assert_eq!(suite["name"], "moments");
    assert!(suite["max_abs_error"].as_f64().unwrap() <= 1e-12);
    assert_eq!(summary["passed"], true);
}

#[test]
fn corrupted_tail_bound_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"grid":{"N":{"min":3,"max":8}},"suites":["tails"],"fault_injection":{"tail_bound_scale":0.05}}"#,
    );
    let out = run(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], false);
    assert!(summary["suites"][0]["worst_slack"].as_f64().unwrap() < 0.0);
    assert!(!summary["suites"][0]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["verify", "--suites", "nope"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["verify", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["verify", "--max-enum-n", "40"], dir.path()).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"grid":{"N":[]}}"#);
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["verify", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["tails", "--n", "4", "--l", "5", "--m", "1"], dir.path()).status.code(), Some(2));
}

#[test]
fn psi2_suite_over_small_n() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"grid":{"N":{"min":2,"max":12}},"suites":["psi2"]}"#);
    let out = run(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn tails_table_within_guard() {
    let dir = TempDir::new().unwrap();
    let out = run(&["tails", "--n", "8", "--l", "1", "--m", "3", "--part", "real", "--samples", "5000"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("tails_N8_l1_m3_real.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,exact,mc,mc_halfwidth,thm23,eq9,eq10,q_form");
    let rows = rows(&csv);
    assert_eq!(rows.len(), 50);
    let exact: Vec<f64> = rows.iter().map(|r| num(&r[1])).collect();
    assert!(exact.windows(2).all(|w| w[1] <= w[0]));
    for r in &rows {
        assert!(num(&r[1]) <= num(&r[4]));
        assert!(!r[2].is_empty() && !r[3].is_empty());
    }
}

#[test]
fn tails_table_over_guard_has_no_exact_column() {
    let dir = TempDir::new().unwrap();
    let out = run(&["tails", "--n", "30", "--l", "7", "--m", "5", "--samples", "5000"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("tails_N30_l7_m5_real.csv")).unwrap();
    for r in rows(&csv) {
        assert!(r[1].is_empty());
        assert!(!r[2].is_empty());
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["tails", "--n", "9", "--l", "2", "--m", "4", "--part", "modulus_centered", "--samples", "30000"];
    let cfg = write_config(a.path(), r#"{"grid":{"N":{"min":3,"max":6}},"mc":{"samples":4000,"batch":500}}"#);
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = bin().args(args).arg("--out").arg(dir.path()).env("SPECTRAL_MASK_THREADS", threads).output();
        assert!(out.unwrap().status.success());
        let out = bin()
            .args(["psi2", "--config", cfg.to_str().unwrap(), "--out"])
            .arg(dir.path())
            .env("SPECTRAL_MASK_THREADS", threads)
            .output();
        assert!(out.unwrap().status.success());
    }
    for name in ["tails_N9_l2_m4_modulus_centered.csv", "psi2.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn invalid_thread_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = bin().args(["crossover", "--out"]).arg(dir.path()).env("SPECTRAL_MASK_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn crossover_table_contains_reference_rows() {
    let dir = TempDir::new().unwrap();
    assert!(run(&["crossover"], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("crossover.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "N,m,coeff_first,coeff_second,verdict,t_star,reason");
    let rows = rows(&csv);
    let find = |n: &str, m: &str| rows.iter().find(|r| r[0] == n && r[1] == m).unwrap().clone();
    assert_eq!(find("2304", "48")[4], "SecondForAllT");
    assert_eq!(find("470", "10")[4], "FirstBeyondTStar");
    for m in ["10", "20", "48"] {
        let n = (48 * m.parse::<u32>().unwrap()).to_string();
        assert_eq!(find(&n, m)[4], "SecondForAllT");
    }
    let skipped = find("3", "2");
    assert!(skipped[4].is_empty() && !skipped[6].is_empty());
}

#[test]
fn psi2_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"grid":{"N":{"min":1,"max":6}},"mc":{"samples":5000,"batch":5000}}"#);
    assert!(run(&["psi2", "--config", cfg.to_str().unwrap()], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("psi2.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "N,l,m,part,exact_psi2,mc_psi2,moment_psi2,upper_cor27,upper_eq12");
    let rows = rows(&csv);
    let r = rows.iter().find(|r| r[..4] == ["2", "1", "1", "real"]).unwrap();
    assert!((num(&r[4]) - 1.0 / 3f64.ln().sqrt()).abs() < 1e-9);
    for r in rows.iter().filter(|r| r[1] != "0") {
        let exact = num(&r[4]);
        assert!(exact <= num(&r[7]) && exact <= num(&r[8]), "{r:?}");
        if r[0] == r[2] {
            assert_eq!(exact, 0.0);
        }
    }
}

#[test]
fn scan_writes_requested_formula() {
    let dir = TempDir::new().unwrap();
    assert!(run(&["scan", "--formula", "psi2_upper"], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("scan_psi2_upper.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "N,l,m,x,value");
    assert!(rows(&csv).iter().all(|r| r[3].is_empty() && !r[4].is_empty()));
    assert_eq!(run(&["scan", "--formula", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn shipped_configs_match_schema() {
    let validator = jsonschema::validator_for(&schema("config.schema.json")).unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(validator.is_valid(&serde_json::from_str(&text).unwrap()), "{}", path.display());
        spectral_mask::config::RunConfig::from_json(&text).unwrap();
    }
    let defaults = serde_json::to_value(spectral_mask::config::RunConfig::default()).unwrap();
    assert!(validator.is_valid(&defaults));
    assert!(!validator.is_valid(&serde_json::json!({"suites": ["nope"]})));
    assert!(!validator.is_valid(&serde_json::json!({"bogus": 1})));
}
