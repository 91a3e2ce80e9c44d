use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use pwhile_dp::aprhl::check::{check_script, CheckConfig, CheckError};
use pwhile_dp::aprhl::params::SValue;
use pwhile_dp::aprhl::rules::RuleError;
use pwhile_dp::grade::Grade;
use pwhile_dp::num::rational::ratio;
use pwhile_dp::num::ExpNum;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn with_eps(eps: (i64, i64)) -> CheckConfig {
    CheckConfig {
        overrides: BTreeMap::from([("eps".to_string(), SValue::Num(ratio(eps.0, eps.1)))]),
        ..Default::default()
    }
}

#[test]
fn abovet_costs_exactly_exp_eps() {
    for eps in [(1, 2), (1, 1), (2, 1)] {
        let t = Instant::now();
        let r = check_script(&corpus("abovet.aprhl"), &with_eps(eps)).unwrap_or_else(|e| panic!("{e}"));
        let took = t.elapsed();
        assert!(took < Duration::from_secs(5), "{took:?}");
        let want = Grade::new(ExpNum::exp(ratio(eps.0, eps.1)), ExpNum::zero()).unwrap();
        assert_eq!(r.grade(), &want);
        assert!(r.goal.is_some());
        assert!(r.assumed.is_empty());
    }
}

#[test]
fn corpus_scripts_check() {
    for (name, gamma) in [
        ("two_counts.aprhl", ExpNum::exp(ratio(1, 1))),
        ("rr_survey.aprhl", ExpNum::rational(ratio(3, 1))),
    ] {
        let r = check_script(&corpus(name), &CheckConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(r.grade().gamma(), &gamma, "{name}");
        assert!(r.grade().delta().is_zero(), "{name}");
    }
    for name in ["gauss_count.aprhl", "cauchy_count.aprhl"] {
        let r = check_script(&corpus(name), &CheckConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        println!("{}", r.render());
    }
}

#[test]
fn understated_goal_is_rejected() {
    let err = check_script(&corpus("bad_grade.aprhl"), &CheckConfig::default()).unwrap_err();
    assert!(matches!(err, CheckError::Goal(_)), "{err}");
}

#[test]
fn small_radius_is_rejected() {
    let err = check_script(&corpus("bad_radius.aprhl"), &CheckConfig::default()).unwrap_err();
    match err.rule_error() {
        Some(RuleError::SideConditionFailed { condition, .. }) => assert!(condition.contains("radius"), "{condition}"),
        _ => panic!("{err}"),
    }
}
