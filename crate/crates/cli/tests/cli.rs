use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chisq_evidence::dist::{sample_reals, Family, RandomStream};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chisq-evidence"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--output-format", "json"];
    all.extend_from_slice(args);
    let o = run(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["version"], 1);
    doc["report"].clone()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn die_lack_of_fit_text() {
    let o = run(&["lof", "--fixture", "die"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("S = 7.7600"), "{text}");
    assert!(text.contains("T = 0.802 ± 1"), "{text}");
    assert!(text.contains("nu = 5"));
    assert!(text.contains("bias adjustment on"));
    assert!(text.contains("negligible evidence"));
}

#[test]
fn die_file_matches_fixture() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/die.csv");
    assert_eq!(json(&["lof", path]), json(&["lof", "--fixture", "die"]));
}

#[test]
fn counts_from_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = bin()
        .args(["--output-format", "json", "lof", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"17\n16\n25\n9\n16\n17\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"], json(&["lof", "--fixture", "die"]));
}

#[test]
fn die_equivalence_json() {
    let r = json(&["equiv", "--fixture", "die", "--k", "0.5"]);
    assert!((f(&r["lambda0"]) - 5.0).abs() < 1e-12);
    assert!((f(&r["m0"]) - 1.157).abs() < 5e-4);
    assert!((f(&r["evidence"]["t"]) - 0.26257).abs() < 1e-4);
    assert_eq!(r["kind"], "euclidean");
    assert_eq!(r["evidence"]["direction"], "for_equivalence");
}

#[test]
fn counts_at_expectation_take_lower_branch() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "flat.txt", "10\n10\n10\n10\n");
    let r = json(&["lof", p.to_str().unwrap()]);
    assert_eq!(f(&r["s_stat"]), 0.0);
    assert!((f(&r["evidence"]["t"]) - (0.2 / 3f64.sqrt() - 6f64.sqrt())).abs() < 1e-12);
    assert_eq!(r["evidence"]["bias_adjusted"], true);
    let raw = json(&["lof", p.to_str().unwrap(), "--no-bias-adjust"]);
    assert!((f(&raw["evidence"]["t"]) + 6f64.sqrt()).abs() < 1e-12);
    assert_eq!(raw["evidence"]["bias_adjusted"], false);
}

#[test]
fn non_uniform_null_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let counts = write(dir.path(), "c.txt", "50\n30\n20\n");
    let probs = write(dir.path(), "p.txt", "0.5\n0.3\n0.2\n");
    let r = json(&["equiv", counts.to_str().unwrap(), "--probs", probs.to_str().unwrap()]);
    assert_eq!(f(&r["s_stat"]), 0.0);
    assert_eq!(r["kind"], "weighted");
    let bad = write(dir.path(), "q.txt", "0.5\n0.3\n");
    let o = run(&["lof", counts.to_str().unwrap(), "--probs", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rejected_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.txt", "12\n");
    let o = run(&["lof", one.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["equiv", "--fixture", "die", "--k", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let empty = write(dir.path(), "empty.txt", "");
    let o = run(&["fit-normal", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
    let bad = write(dir.path(), "bad.txt", "3\n4\nfive\n");
    let o = run(&["lof", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let o = run(&["lof", "/nonexistent/counts.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["simulate", "--scenario", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["lof"]).status.code(), Some(2));
    assert_eq!(run(&["lof", "x.txt", "--fixture", "die"]).status.code(), Some(2));
    assert_eq!(run(&["--output-format", "xml", "lof", "--fixture", "die"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--scenario", "table1_models", "--nu", "3"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--scenario", "vst_lof_calibration", "--reps", "10"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn sample_sizes() {
    let r = json(&["samplesize", "--m0", "3.3", "--r", "6", "--k", "0.5"]);
    assert_eq!(r["n0"], 427);
    assert_eq!(f(&r["n0_scaled"]), 428.0);
    let r = json(&["samplesize", "--m0", "1.645", "--r", "2", "--k", "1"]);
    assert_eq!(r["n0"], 10);
    assert!(r["note"].is_null());
    let o = run(&["samplesize", "--m0", "5", "--r", "25", "--k", "1"]);
    let text = stdout(&o);
    assert!(text.contains("n0 = 1432"));
    assert!(text.contains("432"));
}

#[test]
fn alpha_poisson_report() {
    let r = json(&["fit-poisson", "--fixture", "alpha"]);
    assert_eq!(r["n"], 1207);
    assert_eq!(r["r"], 16);
    assert_eq!(r["first_max"], 2);
    assert_eq!(r["last_min"], 17);
    assert!((f(&r["mu_hat"]) - 8.367).abs() < 5e-4);
    assert!((f(&r["s_stat"]) - 8.95).abs() < 0.01);
    assert!((f(&r["lambda0"]) - 20.117).abs() < 1e-3);
    assert!((f(&r["m0"]) - 2.56).abs() < 5e-3);
    assert!((f(&r["evidence"]["t"]) - 3.53).abs() < 0.01);
    let text = stdout(&run(&["fit-poisson", "--fixture", "alpha"]));
    assert!(text.contains("T = 3.526 ± 1"));
    assert!(text.contains("moderate evidence for equivalence"));
}

#[test]
fn poisson_raw_observations_match_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw = String::new();
    for (j, &c) in chisq_evidence::fixtures::ALPHA_COUNTS.iter().enumerate() {
        for _ in 0..c {
            raw.push_str(&format!("{j}\n"));
        }
    }
    let p = write(dir.path(), "raw.txt", &raw);
    assert_eq!(json(&["fit-poisson", p.to_str().unwrap()]), json(&["fit-poisson", "--fixture", "alpha"]));
}

fn normal_data(dir: &Path) -> PathBuf {
    let data = sample_reals(&mut RandomStream::new(2024, 0), &Family::Normal { mean: 0.0, sd: 1.0 }, 400).unwrap();
    let text: String = data.iter().map(|x| format!("{x}\n")).collect();
    write(dir, "normal400.txt", &text)
}

#[test]
fn normality_golden() {
    let dir = tempfile::tempdir().unwrap();
    let p = normal_data(dir.path());
    let r = json(&["fit-normal", p.to_str().unwrap()]);
    let t = f(&r["evidence"]["t"]);
    assert!(t > 0.0 && t < 4.0, "{t}");
    let n = r["n"].as_u64().unwrap();
    let counts: u64 = r["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, n);
    assert_eq!(r["r"], 10);
    assert_eq!(f(&r["nu"]), 7.0);
    let lambda0 = n as f64 * 0.25 / 9.0;
    assert!((f(&r["lambda0"]) - lambda0).abs() < 1e-12);
    assert!((f(&r["m0"]) - ((lambda0 + 3.5).sqrt() - 3.5f64.sqrt())).abs() < 1e-12);

    let golden: Value =
        serde_json::from_str(include_str!("golden/fit_normal_400.json")).expect("golden file parses");
    assert_eq!(r["counts"], golden["counts"]);
    for key in ["mean", "sd", "s_stat", "lambda0", "m0"] {
        assert!((f(&r[key]) - f(&golden[key])).abs() < 1e-12, "{key}");
    }
    assert!((t - f(&golden["evidence"]["t"])).abs() < 1e-12);
}

#[test]
fn csv_output_for_reports() {
    let text = stdout(&run(&["--output-format", "csv", "lof", "--fixture", "die"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("field,value"));
    assert!(text.contains("\nevidence.t,0.80"));
    assert!(text.contains("\ncounts,17;16;25;9;16;17\n"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--scenario".into(),
            "vst_equiv_calibration".into(),
            "--lambdas".into(),
            "0,6,12".into(),
            "--reps".into(),
            "40000".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    assert!(bin().args(args(&a)).output().unwrap().status.success());
    assert!(bin().args(args(&b)).output().unwrap().status.success());
    let csv_a = std::fs::read(a.join("vst_equiv_calibration.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("vst_equiv_calibration.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("vst_equiv_calibration.json")).unwrap(),
        std::fs::read(b.join("vst_equiv_calibration.json")).unwrap()
    );
    let manifest: Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["reps"], 40000);
    assert!(manifest["elapsed_seconds"].as_f64().is_some());

    let mut reader = csv::Reader::from_reader(csv_a.as_slice());
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let row = reader
        .records()
        .map(|r| r.unwrap())
        .find(|r| &r[col("lambda")] == "6")
        .unwrap();
    assert_eq!(&row[col("label")], "chisq(5,6)");
    let mean: f64 = row[col("mean_t")].parse().unwrap();
    assert!((mean - 0.95).abs() < 0.05, "{mean}");
}

#[test]
fn simulate_config_file_and_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{"reps": 200, "seed": 5, "params": {"scenario": "vst_lof_calibration", "nu": 3.0, "lambdas": [0.0, 2.0]}}"#,
    );
    let out = dir.path().join("from_env");
    let o = bin()
        .args(["--output-format", "csv", "simulate", "--config", config.to_str().unwrap()])
        .env("CHISQ_EVIDENCE_RESULTS_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written = std::fs::read_to_string(out.join("vst_lof_calibration.csv")).unwrap();
    assert_eq!(stdout(&o), written);
    assert_eq!(written.lines().count(), 3);
    let bad = write(dir.path(), "bad.json", r#"{"reps": 5}"#);
    assert_eq!(run(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}
