use std::collections::{BTreeMap, HashMap};

use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use pwhile_dp::num::Rational;
use pwhile_dp::semantics::{interp_exact, interp_sample, ExactConfig, Machine, SampleConfig};
use pwhile_dp::syntax::{parse, OpTable};
use pwhile_dp::{Memory, Value};

fn setup(src: &str) -> (Machine, pwhile_dp::syntax::Cmd, Memory) {
    let p = parse(src).unwrap();
    let (machine, env) = Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).unwrap();
    (machine, p.body, env.default_memory())
}

fn key(m: &Memory, vars: &[&str]) -> String {
    vars.iter().map(|v| m.get(v).map(|x| x.to_string()).unwrap_or_default()).collect::<Vec<_>>().join(",")
}

/// Total variation between the exact output law and the empirical law of `n` runs, on `vars`.
fn tv_exact_vs_sampled(src: &str, init: &[(&str, Value)], vars: &[&str], n: usize, seed: u64) -> f64 {
    let (machine, body, mut m) = setup(src);
    for (k, v) in init {
        m.set(k, v.clone());
    }
    let exact = interp_exact(&machine, &body, &m, &ExactConfig::default()).unwrap();
    let mut law: HashMap<String, f64> = HashMap::new();
    for (mem, w) in exact.dist.iter() {
        *law.entry(key(mem, vars)).or_default() += w.to_f64().unwrap();
    }
    let runs = interp_sample(&machine, &body, &m, &SampleConfig { trials: n, seed, ..SampleConfig::default() }).unwrap();
    let mut emp: HashMap<String, f64> = HashMap::new();
    for mem in &runs.outcomes {
        *emp.entry(key(mem, vars)).or_default() += 1.0 / n as f64;
    }
    // non-termination is the missing mass on both sides
    let mut tv = (runs.exhausted as f64 / n as f64 - (1.0 - exact.dist.mass().to_f64().unwrap())).abs();
    let keys: std::collections::BTreeSet<&String> = law.keys().chain(emp.keys()).collect();
    for k in keys {
        tv += (law.get(k).copied().unwrap_or(0.0) - emp.get(k).copied().unwrap_or(0.0)).abs();
    }
    tv / 2.0
}

const PROGRAMS: &[(&str, &[&str])] = &[
    ("var x:int, n:int; x <- 1; while x = 1 do { x <$ bern(1/2); n <- n + 1 }", &["n"]),
    ("var x:int, n:int; while x < 3 do { x <$ unif(4); n <- n + 1 }", &["x", "n"]),
    ("var b:bool, c:bool; b <$ rr(0.75)(true); c <$ rr(0.6)(b)", &["b", "c"]),
    ("var x:int, y:int; x <$ unif(5); if x < 2 then { y <$ bern(1/3) } else { y <- x + 1 }", &["x", "y"]),
    ("var x:int; x <$ bern(1/4); if x = 1 then { null }", &["x"]),
];

#[test]
fn sampled_law_matches_exact_law() {
    for (i, (src, vars)) in PROGRAMS.iter().enumerate() {
        let tv = tv_exact_vs_sampled(src, &[], vars, 100_000, 17 + i as u64);
        println!("{src}\n  tv {tv:.5}");
        assert!(tv < 0.02, "{src}: tv {tv}");
    }
}

#[test]
fn geometric_loop_has_closed_form() {
    let (machine, body, m) = setup(PROGRAMS[0].0);
    let r = interp_exact(&machine, &body, &m, &ExactConfig::default()).unwrap();
    let mut total = Rational::from_integer(0.into());
    for (mem, w) in r.dist.iter() {
        let k = mem.get("n").and_then(Value::as_i64).unwrap();
        let want = Rational::new(1.into(), num_bigint::BigInt::from(2).pow(k as u32));
        assert_eq!(*w, want, "n = {k}");
        total += w;
    }
    assert!(Rational::one() - total <= r.residual + Rational::new(1.into(), 1_000_000_000_000i64.into()));
}

#[test]
fn sampling_is_reproducible() {
    let (machine, body, m) = setup(PROGRAMS[1].0);
    let cfg = SampleConfig { trials: 2000, seed: 5, ..SampleConfig::default() };
    let a = interp_sample(&machine, &body, &m, &cfg).unwrap();
    let b = interp_sample(&machine, &body, &m, &cfg).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // Straight-line mixtures: exact law sums to one and matches sampling.
    #[test]
    fn bernoulli_mixture(p in 1u32..9, q in 1u32..9, r in 1u32..9) {
        let src = format!(
            "var x:int, y:int; x <$ bern({p}/10); if x = 1 then {{ y <$ bern({q}/10) }} else {{ y <$ bern({r}/10) }}"
        );
        let (machine, body, m) = setup(&src);
        let ex = interp_exact(&machine, &body, &m, &ExactConfig::default()).unwrap();
        prop_assert_eq!(ex.dist.mass(), Rational::one());
        let want = |x: i64, y: i64| {
            let px = if x == 1 { p as f64 / 10.0 } else { 1.0 - p as f64 / 10.0 };
            let py = if x == 1 { q } else { r } as f64 / 10.0;
            px * if y == 1 { py } else { 1.0 - py }
        };
        for (mem, w) in ex.dist.iter() {
            let (x, y) = (mem.get("x").and_then(Value::as_i64).unwrap(), mem.get("y").and_then(Value::as_i64).unwrap());
            prop_assert!((w.to_f64().unwrap() - want(x, y)).abs() < 1e-12);
        }
    }
}
