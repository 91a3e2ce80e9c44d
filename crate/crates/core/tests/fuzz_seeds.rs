//! Replays the fuzz targets on their seed corpora, every prefix of each seed,
//! seeded byte mutations and pathological nesting. A panic or stack overflow
//! here is a parser bug.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwhile_dp::aprhl::parse_assertion;
use pwhile_dp::aprhl::script::{parse_records, parse_script};
use pwhile_dp::audit::audit_from_source;
use pwhile_dp::lifting::text::{parse_liftcheck, run_liftcheck};
use pwhile_dp::syntax::{parse, parse_cmd, print_program};

const PROGRAM: &str = "param sigma: real = 1;\nvar a: real; var x: real;\nx <$ lap(sigma)(a)\n";

fn pwhile(src: &str) {
    if let Ok(p) = parse(src) {
        let printed = print_program(&p);
        let again = parse(&printed).unwrap_or_else(|e| panic!("printed program does not reparse: {e}\n{printed}"));
        assert_eq!(p, again, "round trip changed the program:\n{src}\n---\n{printed}");
    }
    let _ = parse_cmd(src);
}

fn assertion(src: &str) {
    if let Ok(a) = parse_assertion(src) {
        let _ = parse_assertion(&a.to_string());
    }
}

fn script(src: &str) {
    let _ = parse_script(src);
}

fn liftcheck(src: &str) {
    if let Ok(lc) = parse_liftcheck(src) {
        if lc.left.len() <= 8 && lc.right.len() <= 8 {
            let _ = run_liftcheck(&lc);
        }
    }
}

fn audit(src: &str) {
    let _ = parse_records(src, "audit");
    let _ = audit_from_source(src, PROGRAM, "laplace_release.pwhile", &BTreeMap::new());
}

type Target = (&'static str, fn(&str));

const TARGETS: &[Target] = &[
    ("parse_pwhile", pwhile),
    ("parse_assertion", assertion),
    ("parse_script", script),
    ("parse_liftcheck", liftcheck),
    ("parse_audit", audit),
];

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("seed_")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn seeds_and_prefixes() {
    for (target, run) in TARGETS {
        let ss = seeds(target);
        assert!(!ss.is_empty(), "no seeds for {target}");
        for (_, src) in &ss {
            run(src);
            for (i, _) in src.char_indices() {
                run(&src[..i]);
            }
        }
    }
}

fn mutate(rng: &mut ChaCha8Rng, src: &[u8], pool: &[u8]) -> Vec<u8> {
    let mut v = src.to_vec();
    for _ in 0..rng.random_range(1..6) {
        let at = if v.is_empty() { 0 } else { rng.random_range(0..=v.len()) };
        match rng.random_range(0..5) {
            0 if at < v.len() => {
                v.remove(at);
            }
            1 => v.insert(at, pool[rng.random_range(0..pool.len())]),
            2 if at < v.len() => v[at] = pool[rng.random_range(0..pool.len())],
            3 if !v.is_empty() => {
                // duplicate a short slice
                let from = rng.random_range(0..v.len());
                let to = (from + rng.random_range(1..16)).min(v.len());
                let chunk = v[from..to].to_vec();
                v.splice(at..at, chunk);
            }
            _ if at < v.len() => v.truncate(at),
            _ => {}
        }
    }
    v
}

#[test]
fn seeded_mutations() {
    let pool = b"(){}[]<>,;:=!&|+-*/.$\"'# \n0123456789abexjprdlqtS";
    let mut runs = 0;
    for (t, (target, run)) in TARGETS.iter().enumerate() {
        let ss = seeds(target);
        let mut rng = ChaCha8Rng::seed_from_u64(0xf022 + t as u64);
        for _ in 0..3000 {
            let (_, src) = &ss[rng.random_range(0..ss.len())];
            let bytes = mutate(&mut rng, src.as_bytes(), pool);
            if let Ok(s) = std::str::from_utf8(&bytes) {
                run(s);
                runs += 1;
            }
        }
    }
    assert!(runs > 10_000);
}

#[test]
fn deep_nesting_is_rejected_not_overflowed() {
    let n = 100_000;
    let open = |s: &str| s.repeat(n);
    for (_, run) in TARGETS {
        run(&format!("{}1{}", open("("), open(")")));
        run(&format!("{}1", open("!")));
        run(&format!("{}1", open("-")));
        run(&open("["));
        run(&format!("var x:int; {}skip", open("if true then {")));
        run(&format!("var x:int; if true then {{ skip }}{}", " else if true then { skip }".repeat(n / 10)));
        run(&format!("aprhl 1\n{}", open("seq {")));
        run(&format!("audit 1\nleft(a: {}0{})", open("("), open(")")));
    }
    assert!(parse(&format!("var x:int; x <- {}1{}", "(".repeat(500), ")".repeat(500))).is_err());
}

#[test]
fn long_flat_inputs_are_fine() {
    let stmts = vec!["x <- x + 1"; 5000].join("; ");
    let p = parse(&format!("var x:int; {stmts}")).unwrap();
    pwhile(&print_program(&p));
    let sum = vec!["1"; 5000].join(" + ");
    assert!(parse(&format!("var x:int; x <- {sum}")).is_ok());
}
