use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use pwhile_dp::aprhl::params::SValue;
use pwhile_dp::audit::{audit_dp, audit_from_source, load_audit, AuditVerdict};
use pwhile_dp::num::rational::ratio;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn eps(n: i64, d: i64) -> BTreeMap<String, SValue> {
    BTreeMap::from([("eps".to_string(), SValue::Num(ratio(n, d)))])
}

#[test]
fn laplace_understated_budget_is_refuted() {
    let spec = load_audit(&corpus("laplace_release.audit"), &eps(1, 2)).unwrap();
    let t = Instant::now();
    let r = audit_dp(&spec).unwrap();
    println!("{}{:?}", r.render(), t.elapsed());
    assert!(r.is_violation());
    let again = audit_dp(&spec).unwrap();
    assert_eq!(again.verdict, r.verdict);
}

#[test]
fn laplace_exact_budget_is_consistent() {
    let spec = load_audit(&corpus("laplace_release.audit"), &eps(1, 1)).unwrap();
    let r = audit_dp(&spec).unwrap();
    println!("{}", r.render());
    assert_eq!(r.verdict, AuditVerdict::Consistent);
}

#[test]
fn identical_inputs_are_consistent_at_zero() {
    let prog = "var a: int; var x: int;\n x <$ unif(6)";
    let src = "audit 1\nprogram \"p\"\nleft(a: 0)\nright(a: 0)\naudit(output: \"x\", eps: 0, trials: 20000)\n";
    let r = audit_dp(&audit_from_source(src, prog, "p", &BTreeMap::new()).unwrap()).unwrap();
    assert_eq!(r.verdict, AuditVerdict::Consistent);
}

#[test]
fn swapping_inputs_swaps_margins() {
    let prog = "var a: bool; var o: bool;\n o <$ rr(0.75)(a)";
    let audit = |l: &str, r: &str| {
        let src = format!("audit 1\nprogram \"p\"\nleft(a: {l})\nright(a: {r})\naudit(output: \"o\", eps: 0.5, trials: 20000, seed: 5)\n");
        audit_dp(&audit_from_source(&src, prog, "p", &BTreeMap::new()).unwrap()).unwrap()
    };
    let (ab, ba) = (audit("true", "false"), audit("false", "true"));
    for (x, y) in ab.events.iter().zip(&ba.events) {
        assert_eq!(x.margin12, y.margin21);
        assert_eq!(x.margin21, y.margin12);
    }
    assert!(ab.is_violation() && ba.is_violation());
}

#[test]
fn distant_inputs_are_rejected() {
    let prog = "var a: real; var x: real;\n x <$ lap(1)(a)";
    let src = "audit 1\nprogram \"p\"\nleft(a: 0)\nright(a: 3)\naudit(output: \"x\", eps: 1, bound: 1, trials: 1000)\n";
    let err = audit_dp(&audit_from_source(src, prog, "p", &BTreeMap::new()).unwrap()).unwrap_err();
    assert!(err.to_string().contains("distance"), "{err}");
}

#[test]
fn abovet_is_consistent_with_its_proof() {
    let r = audit_dp(&load_audit(&corpus("abovet.audit"), &BTreeMap::new()).unwrap()).unwrap();
    println!("{}", r.render());
    assert_eq!(r.verdict, AuditVerdict::Consistent);
}
