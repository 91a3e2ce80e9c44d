use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).display().to_string()
}

fn aprhl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aprhl")).args(args).env_remove("APRHL_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let o = aprhl(&all);
    (o.status.code().unwrap(), serde_json::from_slice(&o.stdout).unwrap_or(Value::Null))
}

#[test]
fn printed_program_reparses_to_the_same_hash() {
    let o = aprhl(&["parse", &corpus("abovet.pwhile")]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (body, hash) = text.rsplit_once("hash ").unwrap();
    let tmp = std::env::temp_dir().join(format!("aprhl-roundtrip-{}.pwhile", std::process::id()));
    std::fs::write(&tmp, body).unwrap();
    let again = stdout(&aprhl(&["parse", tmp.to_str().unwrap()]));
    std::fs::remove_file(&tmp).ok();
    assert_eq!(again.rsplit_once("hash ").unwrap().1, hash);
}

#[test]
fn typecheck_lists_variables() {
    let o = aprhl(&["typecheck", &corpus("abovet.pwhile")]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.contains("d: vec_real(4)") && t.ends_with("ok\n"), "{t}");
}

#[test]
fn exact_run_of_randomized_response() {
    let o = aprhl(&["run", &corpus("rr_survey.pwhile"), "--init", "a1=true", "--output", "o1"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.contains("1/4\tfalse") && t.contains("3/4\ttrue"), "{t}");
}

#[test]
fn lift_check_reports_membership() {
    let (code, v) = json(&["lift-check", &corpus("rr_pair.lift")]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["holds"], Value::Bool(true));
    assert_eq!(v["report"]["witness"], Value::Bool(true));
}

#[test]
fn certify_cauchy_matches_closed_form() {
    let (code, v) = json(&["certify", "cauchy", "--rho", "1", "--r", "1"]);
    assert_eq!(code, 0);
    let got = v["report"]["formula_gamma"].as_f64().unwrap();
    assert!((got - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert_eq!(v["tool"], "aprhl");
    assert_eq!(v["command"], "certify");
}

#[test]
fn check_accepts_and_rejects() {
    let o = aprhl(&["check", &corpus("two_counts.aprhl")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = aprhl(&["check", &corpus("bad_grade.aprhl")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("goal not met"));
    let o = aprhl(&["check", &corpus("abovet.aprhl"), "--eps", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn audit_verdicts_drive_the_exit_code() {
    let (code, _) = json(&["audit", &corpus("laplace_release.audit"), "--eps", "1"]);
    assert_eq!(code, 0);
    let (code, v) = json(&["audit", &corpus("laplace_release.audit"), "--eps", "0.5"]);
    assert_eq!(code, 1);
    assert_eq!(v["exit"], 1);
}

#[test]
fn fuzzer_is_seeded() {
    let (code, a) = json(&["fuzz-soundness", "--trials", "60"]);
    assert_eq!(code, 0);
    assert_eq!(a["report"]["counterexamples"].as_array().unwrap().len(), 0);
    let b = Command::new(env!("CARGO_BIN_EXE_aprhl"))
        .args(["--format", "json", "fuzz-soundness", "--trials", "60"])
        .env("APRHL_SEED", "0")
        .output()
        .unwrap();
    let b: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(a["report"], b["report"]);
    let (code, _) = json(&["fuzz-soundness", "--trials", "300", "--rules", "seq", "--mutation", "seq-sum"]);
    assert_eq!(code, 1);
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(aprhl(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(aprhl(&["parse", "/nonexistent/x.pwhile"]).status.code(), Some(2));
}

#[test]
fn refused_certificates_exit_one() {
    let o = aprhl(&["certify", "gauss", "--sigma", "1", "--r", "1", "--eps", "0.5", "--delta", "0.00001"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c > 3/2"));
    assert_eq!(aprhl(&["certify", "lap", "--sigma", "1", "--r", "0"]).status.code(), Some(1));
}
