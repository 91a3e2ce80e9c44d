//! Extensional soundness fuzzing of the proof rules.
//!
//! Programs live over a finite universe (`x ∈ {0,1,2}`, booleans `b`, `c`).
//! Premises are random judgements whose grades are made tight by a
//! subset-enumeration oracle; the rule is applied with side conditions
//! decided exhaustively over the universe; the conclusion is then checked
//! with the exact interpreter and `lifting_member` on every memory pair that
//! satisfies its precondition.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::assertion::{parse_assertion, Assertion};
use super::entail::{Policy, Verdict};
use super::params::{Params, SValue};
use super::rules::{apply_rule, Discharger, Judgement, Mutation, RuleCtx};
use crate::grade::Grade;
use crate::lifting::{lifting_member, Membership, Relation};
use crate::measure::SubDist;
use crate::num::Rational;
use crate::semantics::sample::trial_rng;
use crate::semantics::{interp_exact, ExactConfig, Machine};
use crate::syntax::types::TypeEnv;
use crate::syntax::{parse, parse_cmd, print_cmd_inline, Cmd, OpTable, Side};
use crate::value::{Memory, Value};

pub const FUZZ_RULES: &[&str] = &[
    "seq", "cond", "while", "case", "weak", "op", "comp", "comp_endo", "frame", "rand", "forall_eq",
];

const UNIVERSE: &str = "var x: int; var b: bool; var c: bool;\n skip";
const X_DOMAIN: i64 = 3;

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub trials: usize,
    pub seed: u64,
    /// Largest output support the tight-grade oracle enumerates.
    pub support_bound: usize,
    pub rules: Vec<String>,
    pub mutation: Option<Mutation>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            trials: 1100,
            seed: 0,
            support_bound: 8,
            rules: FUZZ_RULES.iter().map(|s| s.to_string()).collect(),
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RuleStats {
    pub generated: usize,
    /// The rule refused the instance (a side condition failed).
    pub rejected: usize,
    /// No memory pair satisfies the conclusion's precondition, or supports were too large.
    pub skipped: usize,
    pub validated: usize,
    pub counterexamples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub rule: String,
    pub trial: usize,
    pub premises: Vec<String>,
    pub conclusion: String,
    pub left: String,
    pub right: String,
    pub violation: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: usize,
    pub mutation: Option<String>,
    pub validated: usize,
    pub per_rule: BTreeMap<String, RuleStats>,
    pub counterexamples: Vec<Counterexample>,
    /// Premises the oracle itself found invalid; a harness fault when non-zero.
    pub invalid_premises: usize,
}

type Out = Arc<Vec<(usize, Rational)>>;

/// The finite universe with a cache of exact runs.
pub struct World {
    pub env: TypeEnv,
    pub machine: Machine,
    mems: Vec<Memory>,
    index: HashMap<Memory, usize>,
    cache: Mutex<HashMap<(String, usize), Option<Out>>>,
    support_bound: usize,
}

impl World {
    pub fn new(support_bound: usize) -> Self {
        let p = parse(UNIVERSE).expect("universe parses");
        let (machine, env) = Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).expect("universe typechecks");
        let mut mems = Vec::new();
        for x in 0..X_DOMAIN {
            for b in [false, true] {
                for c in [false, true] {
                    mems.push(Memory::from_pairs([
                        ("x", Value::int(x)),
                        ("b", Value::Bool(b)),
                        ("c", Value::Bool(c)),
                    ]));
                }
            }
        }
        let index = mems.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        World { env, machine, mems, index, cache: Mutex::new(HashMap::new()), support_bound }
    }

    fn domain(&self, var: &str) -> Vec<Value> {
        match var.trim_end_matches("__mid") {
            "x" => (0..X_DOMAIN).map(Value::int).collect(),
            _ => vec![Value::Bool(false), Value::Bool(true)],
        }
    }

    /// Output distribution as indices; `None` when the run leaves mass
    /// behind or escapes the universe.
    fn run(&self, c: &Cmd, i: usize) -> Option<Out> {
        let key = (print_cmd_inline(c), i);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return hit.clone();
        }
        let out = interp_exact(&self.machine, c, &self.mems[i], &ExactConfig::default()).ok().and_then(|r| {
            if !r.residual.is_zero() {
                return None;
            }
            r.dist
                .iter()
                .map(|(m, w)| self.index.get(m).map(|&j| (j, w.clone())))
                .collect::<Option<Vec<_>>>()
                .map(Arc::new)
        });
        self.cache.lock().expect("cache lock").insert(key, out.clone());
        out
    }

    fn holds(&self, a: &Assertion, i: usize, j: usize) -> bool {
        a.eval(&self.mems[i], &self.mems[j], &self.machine).unwrap_or(false)
    }

    fn pairs(&self, pre: &Assertion) -> Vec<(usize, usize)> {
        let n = self.mems.len();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| self.holds(pre, i, j)).collect()
    }

    /// Output pairs of every input pair satisfying `pre`, with the post relation as a matrix.
    fn outputs(&self, c1: &Cmd, c2: &Cmd, pre: &Assertion, post: &Assertion) -> Option<Vec<Instance>> {
        let mut out = Vec::new();
        for (i, j) in self.pairs(pre) {
            let (o1, o2) = (self.run(c1, i)?, self.run(c2, j)?);
            if o1.len() > self.support_bound || o2.len() > self.support_bound {
                return None;
            }
            let related = o1.iter().map(|(a, _)| o2.iter().map(|(b, _)| self.holds(post, *a, *b)).collect()).collect();
            out.push(Instance { input: (i, j), o1, o2, related });
        }
        Some(out)
    }

    /// Checks a judgement; `Ok(n)` with the number of input pairs checked.
    fn validate(&self, j: &Judgement) -> Result<Result<usize, (usize, usize, String)>, ()> {
        let insts = self.outputs(&j.left, &j.right, &j.pre, &j.post).ok_or(())?;
        for inst in &insts {
            let d1 = SubDist::from_weights(inst.o1.iter().cloned()).map_err(|_| ())?;
            let d2 = SubDist::from_weights(inst.o2.iter().cloned()).map_err(|_| ())?;
            let mut rel = Vec::new();
            for (a, row) in inst.o1.iter().zip(&inst.related) {
                for (b, &r) in inst.o2.iter().zip(row) {
                    if r {
                        rel.push((a.0, b.0));
                    }
                }
            }
            match lifting_member(&d1, &d2, &Relation::explicit(rel), &j.grade, true) {
                Ok(Membership::Holds) => {}
                Ok(Membership::Fails(v)) => {
                    let show = |s: &[usize]| s.iter().map(|&k| self.mems[k].to_string()).collect::<Vec<_>>().join(" ");
                    let msg = format!(
                        "{:?}: set {{{}}} image {{{}}}: {} > {}",
                        v.direction,
                        show(&v.set),
                        show(&v.image),
                        v.lhs,
                        v.rhs
                    );
                    return Ok(Err((inst.input.0, inst.input.1, msg)));
                }
                Err(_) => return Err(()),
            }
        }
        Ok(Ok(insts.len()))
    }

    /// The tightest grade at the chosen γ for which every item holds.
    fn tight(&self, items: &[(&Cmd, &Cmd, &Assertion, &Assertion)], choice: GammaChoice) -> Option<Grade> {
        let mut all = Vec::new();
        for (c1, c2, pre, post) in items {
            all.extend(self.outputs(c1, c2, pre, post)?);
        }
        let gamma = match choice {
            GammaChoice::Fixed(g) => g,
            GammaChoice::Star => {
                let mut best = Some(Rational::one());
                for inst in &all {
                    best = match (best, inst.gamma_star()) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        _ => None,
                    };
                }
                best.unwrap_or_else(Rational::one)
            }
        };
        let delta = all.iter().map(|inst| inst.min_delta(&gamma)).max().unwrap_or_else(Rational::zero);
        Grade::from_rationals(gamma, delta).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum GammaChoice {
    /// Smallest γ that needs no δ, when finite.
    Star,
    Fixed(Rational),
}

/// Outputs of one input pair.
struct Instance {
    input: (usize, usize),
    o1: Out,
    o2: Out,
    related: Vec<Vec<bool>>,
}

impl Instance {
    /// Worst `(ν(A), ν′(Φ(A)))` pairs over all sets, both directions.
    fn events(&self) -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        let (n1, n2) = (self.o1.len(), self.o2.len());
        for mask in 1u32..(1 << n1) {
            let mut a = Rational::zero();
            let mut img = vec![false; n2];
            for i in 0..n1 {
                if mask >> i & 1 == 1 {
                    a += &self.o1[i].1;
                    for (k, hit) in img.iter_mut().enumerate() {
                        *hit |= self.related[i][k];
                    }
                }
            }
            let b = (0..n2).filter(|&k| img[k]).fold(Rational::zero(), |s, k| s + &self.o2[k].1);
            out.push((a, b));
        }
        for mask in 1u32..(1 << n2) {
            let mut a = Rational::zero();
            let mut img = vec![false; n1];
            for k in 0..n2 {
                if mask >> k & 1 == 1 {
                    a += &self.o2[k].1;
                    for (i, hit) in img.iter_mut().enumerate() {
                        *hit |= self.related[i][k];
                    }
                }
            }
            let b = (0..n1).filter(|&i| img[i]).fold(Rational::zero(), |s, i| s + &self.o1[i].1);
            out.push((a, b));
        }
        out
    }

    fn min_delta(&self, gamma: &Rational) -> Rational {
        self.events().into_iter().map(|(a, b)| a - gamma * b).fold(Rational::zero(), |m, d| m.max(d))
    }

    fn gamma_star(&self) -> Option<Rational> {
        let mut best = Rational::one();
        for (a, b) in self.events() {
            if a.is_zero() {
                continue;
            }
            if b.is_zero() {
                return None;
            }
            best = best.max(a / b);
        }
        Some(best)
    }
}

/// Side conditions decided over the whole universe.
pub struct OracleDischarger<'w> {
    pub world: &'w World,
}

impl Discharger for OracleDischarger<'_> {
    fn discharge(&self, _env: &TypeEnv, machine: &Machine, hyp: &Assertion, goal: &Assertion) -> Verdict {
        let w = self.world;
        let mids: Vec<String> = hyp
            .vars()
            .into_iter()
            .chain(goal.vars())
            .filter(|(v, _)| v.ends_with("__mid"))
            .map(|(v, _)| v)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut extensions = vec![Memory::new()];
        for v in &mids {
            extensions = extensions
                .into_iter()
                .flat_map(|m| w.domain(v).into_iter().map(move |val| m.with(v, val)))
                .collect();
        }
        let mut count = 0;
        for m1 in &w.mems {
            for m2 in &w.mems {
                for ext in &extensions {
                    let mut l = m1.clone();
                    for (k, v) in ext.iter() {
                        l.set(k, v.clone());
                    }
                    count += 1;
                    let h = hyp.eval(&l, m2, machine);
                    let ok = match h {
                        Ok(false) => true,
                        Ok(true) => goal.eval(&l, m2, machine).unwrap_or(false),
                        Err(_) => false,
                    };
                    if !ok {
                        return Verdict::Refuted { left: l.to_string(), right: m2.to_string() };
                    }
                }
            }
        }
        Verdict::Tested { samples: count, exhaustive: true, seed: 0 }
    }

    fn frame(&self, _env: &TypeEnv, _machine: &Machine, theta: &Assertion, left: &Cmd, right: &Cmd) -> Option<Verdict> {
        let w = self.world;
        let pairs = w.pairs(theta);
        for &(i, j) in &pairs {
            let (o1, o2) = (w.run(left, i)?, w.run(right, j)?);
            for (a, _) in o1.iter() {
                for (b, _) in o2.iter() {
                    if !w.holds(theta, *a, *b) {
                        return Some(Verdict::Refuted { left: w.mems[i].to_string(), right: w.mems[j].to_string() });
                    }
                }
            }
        }
        Some(Verdict::Tested { samples: pairs.len(), exhaustive: true, seed: 0 })
    }
}

// ------------------------------------------------------------- generators

const X_ATOMS: &[&str] = &[
    "x <- (x + 1) % 3",
    "x <- 0",
    "x <$ unif(3)",
    "x <$ bern(0.25)",
    "if c then { x <$ bern(0.2) } else { x <$ bern(0.8) }",
    "if b then { x <- 1 } else { x <- 2 }",
];
const BC_ATOMS: &[&str] = &[
    "b <- !b",
    "b <- x = 0",
    "b <$ rr(0.75)(b)",
    "b <$ rr(0.8)(c)",
    "b <$ rr(0.5)(c)",
    "c <- !c",
    "c <$ rr(0.8)(b)",
    "c <- b && x < 2",
    "c <$ rr(0.75)(x = 2)",
    "skip",
];
/// Commands that each reveal something about `c`; composing two compounds the loss.
const LEAKS: &[&str] = &[
    "b <$ rr(0.8)(c)",
    "b <$ rr(0.75)(c)",
    "if c then { x <$ bern(0.2) } else { x <$ bern(0.8) }",
    "x <$ bern(0.25); b <$ rr(0.8)(c)",
];
const SECRETS: &[&str] = &["c<1> != c<2>", "true", "c<1> != c<2> && x<1> = x<2>"];
const GUARDS: &[&str] = &["x = 0", "b", "c", "x < 2", "b && c"];
/// Guards as left-tagged assertions, with the variables they read.
const TAGGED_GUARDS: &[(&str, &str, &[&str])] = &[
    ("x = 0", "x<1> = 0", &["x"]),
    ("b", "b<1>", &["b"]),
    ("c", "c<1>", &["c"]),
    ("x < 2", "x<1> < 2", &["x"]),
    ("b && c", "b<1> && c<1>", &["b", "c"]),
];
const PRES: &[&str] = &[
    "true",
    "x<1> = x<2>",
    "b<1> = b<2>",
    "c<1> = c<2>",
    "x<1> = x<2> && b<1> = b<2>",
    "x<1> = x<2> && c<1> = c<2>",
    "b<1> != b<2>",
    "c<1> != c<2>",
    "x<1> = x<2> && b<1> = b<2> && c<1> = c<2>",
    "x<1> <= x<2>",
    "x<1> + 1 >= x<2> && x<2> + 1 >= x<1>",
    "b<1> = b<2> && c<1> != c<2>",
];
const POSTS: &[&str] = &["(x<1> = 0) = (x<2> = 0)", "b<1> => b<2>", "x<1> = x<2> || b<1>", "false"];
const SYMMETRIC: &[&str] = &[
    "true",
    "x<1> = x<2>",
    "b<1> = b<2>",
    "c<1> != c<2>",
    "x<1> + 1 >= x<2> && x<2> + 1 >= x<1>",
    "b<1> = b<2> && c<1> = c<2>",
];
const REFLEXIVE: &[&str] = &["x<1> = x<2>", "x<1> <= x<2>", "true", "b<1> = b<2> && x<1> <= x<2>", "c<1> = c<2>"];
const CASES: &[&str] = &["b<1>", "x<1> = 0", "c<1> = c<2>", "x<1> < x<2>", "b<2>"];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty pool")
}

fn atom_text(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.45) {
        pick(rng, X_ATOMS).to_string()
    } else {
        pick(rng, BC_ATOMS).to_string()
    }
}

fn cmd_text(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 {
        return atom_text(rng);
    }
    match rng.random_range(0..10) {
        0..=4 => atom_text(rng),
        5..=7 => format!("{}; {}", cmd_text(rng, depth - 1), cmd_text(rng, depth - 1)),
        8 => format!(
            "if {} then {{ {} }} else {{ {} }}",
            pick(rng, GUARDS),
            cmd_text(rng, depth - 1),
            cmd_text(rng, depth - 1)
        ),
        _ => format!("while x < 2 do {{ x <- x + 1; {} }}", pick(rng, BC_ATOMS)),
    }
}

fn gen_cmd(rng: &mut ChaCha8Rng) -> Cmd {
    parse_cmd(&cmd_text(rng, 2)).expect("generated commands parse")
}

fn assertion(s: &str) -> Assertion {
    parse_assertion(s).expect("pool assertions parse")
}

fn eq_on(vars: &[String]) -> Assertion {
    Assertion::and(vars.iter().map(|v| assertion(&format!("{v}<1> = {v}<2>"))))
}

/// Equalities on some written variables, plus the precondition conjuncts the commands leave alone.
fn natural_post(rng: &mut ChaCha8Rng, c1: &Cmd, c2: &Cmd, pre: &Assertion) -> Assertion {
    let (w1, w2) = (c1.written_vars(), c2.written_vars());
    let written: Vec<String> = w1.union(&w2).cloned().collect();
    let chosen: Vec<String> = written.iter().filter(|_| rng.random_bool(0.7)).cloned().collect();
    let kept = pre.conjuncts().into_iter().filter(|a| {
        a.vars().iter().all(|(v, s)| match s {
            Side::Left => !w1.contains(v),
            Side::Right => !w2.contains(v),
        })
    });
    Assertion::and(std::iter::once(eq_on(&chosen)).chain(kept.cloned()))
}

/// Equality on everything `c` writes, keeping the untouched parts of `pre`.
fn full_post(c: &Cmd, pre: &Assertion) -> Assertion {
    let written = c.written_vars();
    let kept = pre.conjuncts().into_iter().filter(|a| a.vars().iter().all(|(v, _)| !written.contains(v)));
    Assertion::and(std::iter::once(eq_on(&written.iter().cloned().collect::<Vec<_>>())).chain(kept.cloned()))
}

fn choose_post(rng: &mut ChaCha8Rng, c1: &Cmd, c2: &Cmd, pre: &Assertion) -> Assertion {
    match rng.random_range(0..10) {
        0..=5 => natural_post(rng, c1, c2, pre),
        6..=8 => assertion(pick(rng, PRES)),
        _ => assertion(pick(rng, POSTS)),
    }
}

fn choose_gamma(rng: &mut ChaCha8Rng) -> GammaChoice {
    match rng.random_range(0..6) {
        0..=2 => GammaChoice::Star,
        k => GammaChoice::Fixed(Rational::from_integer((k - 2).into())),
    }
}

fn judgement(w: &World, c1: Cmd, c2: Cmd, pre: Assertion, post: Assertion, g: GammaChoice) -> Option<Judgement> {
    let grade = w.tight(&[(&c1, &c2, &pre, &post)], g)?;
    Some(Judgement { left: c1, right: c2, pre, post, grade })
}

fn str_param(s: impl Into<String>) -> SValue {
    SValue::Str(s.into())
}

fn num_param(n: i64) -> SValue {
    SValue::Num(Rational::from_integer(n.into()))
}

type Generated = (String, Vec<Judgement>, Params);

fn generate(rule: &str, rng: &mut ChaCha8Rng, w: &World) -> Option<Generated> {
    let mut params = BTreeMap::new();
    let premises = match rule {
        "seq" if rng.random_bool(0.4) => {
            let (c1, d1) = (parse_cmd(pick(rng, LEAKS)).ok()?, parse_cmd(pick(rng, LEAKS)).ok()?);
            let pre = assertion(pick(rng, SECRETS));
            let mid = full_post(&c1, &pre);
            let post = full_post(&d1, &mid);
            let j1 = judgement(w, c1.clone(), c1, pre, mid.clone(), GammaChoice::Star)?;
            let j2 = judgement(w, d1.clone(), d1, mid, post, GammaChoice::Star)?;
            vec![j1, j2]
        }
        "seq" => {
            let c1 = gen_cmd(rng);
            let c2 = if rng.random_bool(0.7) { c1.clone() } else { gen_cmd(rng) };
            let pre = assertion(pick(rng, PRES));
            let mid = choose_post(rng, &c1, &c2, &pre);
            let d1 = gen_cmd(rng);
            let d2 = if rng.random_bool(0.7) { d1.clone() } else { gen_cmd(rng) };
            let post = choose_post(rng, &d1, &d2, &mid);
            let j1 = judgement(w, c1, c2, pre, mid.clone(), choose_gamma(rng))?;
            let j2 = judgement(w, d1, d2, mid, post, choose_gamma(rng))?;
            vec![j1, j2]
        }
        "cond" => {
            let (g, tagged, reads) = *TAGGED_GUARDS.choose(rng)?;
            let gvars: Vec<String> = reads.iter().map(|v| v.to_string()).collect();
            let pre = Assertion::and([eq_on(&gvars), assertion(pick(rng, PRES))]);
            let g1 = assertion(tagged);
            let (t1, t2, e1, e2) = (gen_cmd(rng), gen_cmd(rng), gen_cmd(rng), gen_cmd(rng));
            let (t2, e2) = if rng.random_bool(0.6) { (t1.clone(), e1.clone()) } else { (t2, e2) };
            let post = choose_post(rng, &t1, &t2, &pre);
            let pt = Assertion::and([pre.clone(), g1.clone()]);
            let pe = Assertion::and([pre.clone(), Assertion::not(g1)]);
            let grade = w.tight(&[(&t1, &t2, &pt, &post), (&e1, &e2, &pe, &post)], choose_gamma(rng))?;
            params.insert("guard".into(), str_param(g));
            params.insert("pre".into(), str_param(pre.to_string()));
            vec![
                Judgement { left: t1, right: t2, pre: pt, post: post.clone(), grade: grade.clone() },
                Judgement { left: e1, right: e2, pre: pe, post, grade },
            ]
        }
        "while" => {
            let rest = pick(rng, &["true", "b<1> = b<2>", "c<1> = c<2>", "b<1> = b<2> && c<1> = c<2>", "c<1> != c<2>"]);
            let theta_text = format!("x<1> = x<2> && 0 <= x<1> && x<1> <= 2 && {rest}");
            let theta = assertion(&theta_text);
            let a1 = pick(rng, BC_ATOMS);
            let a2 = if rng.random_bool(0.7) { a1 } else { pick(rng, BC_ATOMS) };
            let b1 = parse_cmd(&format!("x <- x + 1; {a1}")).ok()?;
            let b2 = parse_cmd(&format!("x <- x + 1; {a2}")).ok()?;
            let mut out = Vec::new();
            for k in 0..2 {
                let pre = Assertion::and([theta.clone(), assertion(&format!("x<1> = {k}")), assertion("x<1> <= 2")]);
                let post = Assertion::and([theta.clone(), assertion(&format!("x<1> > {k}"))]);
                out.push(judgement(w, b1.clone(), b2.clone(), pre, post, choose_gamma(rng))?);
            }
            params.insert("guard".into(), str_param("x < 2"));
            params.insert("variant".into(), str_param("x"));
            params.insert("bound".into(), num_param(2));
            params.insert("invariant".into(), str_param(theta_text));
            out
        }
        "case" => {
            let theta = assertion(pick(rng, CASES));
            let c1 = gen_cmd(rng);
            let c2 = if rng.random_bool(0.6) { c1.clone() } else { gen_cmd(rng) };
            let pre = assertion(pick(rng, PRES));
            let post = choose_post(rng, &c1, &c2, &pre);
            let p1 = Assertion::and([pre.clone(), theta.clone()]);
            let p2 = Assertion::and([pre.clone(), Assertion::not(theta.clone())]);
            let grade = w.tight(&[(&c1, &c2, &p1, &post), (&c1, &c2, &p2, &post)], choose_gamma(rng))?;
            params.insert("theta".into(), str_param(theta.to_string()));
            params.insert("pre".into(), str_param(pre.to_string()));
            vec![
                Judgement { left: c1.clone(), right: c2.clone(), pre: p1, post: post.clone(), grade: grade.clone() },
                Judgement { left: c1, right: c2, pre: p2, post, grade },
            ]
        }
        "weak" => {
            let c1 = gen_cmd(rng);
            let c2 = if rng.random_bool(0.6) { c1.clone() } else { gen_cmd(rng) };
            let pre = assertion(pick(rng, PRES));
            let post = choose_post(rng, &c1, &c2, &pre);
            let j = judgement(w, c1, c2, pre.clone(), post.clone(), choose_gamma(rng))?;
            if rng.random_bool(0.5) {
                params.insert("pre".into(), str_param(Assertion::and([pre, assertion(pick(rng, PRES))]).to_string()));
            }
            let conj = post.conjuncts();
            let weaker = if conj.len() > 1 {
                let drop = rng.random_range(0..conj.len());
                Assertion::and(conj.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, a)| (*a).clone()))
            } else {
                Assertion::Or(vec![post.clone(), assertion(pick(rng, PRES))])
            };
            params.insert("post".into(), str_param(weaker.to_string()));
            let gamma = j.grade.gamma().as_rational()? + Rational::from_integer(rng.random_range(0..2).into());
            let delta = j.grade.delta().as_rational()? + Rational::new(rng.random_range(0..2).into(), 10.into());
            params.insert("grade".into(), SValue::Tuple(vec![SValue::Num(gamma), SValue::Num(delta)]));
            vec![j]
        }
        "op" => {
            let (c1, c2) = (gen_cmd(rng), gen_cmd(rng));
            let pre = assertion(pick(rng, PRES));
            let post = choose_post(rng, &c1, &c2, &pre);
            vec![judgement(w, c1, c2, pre, post, choose_gamma(rng))?]
        }
        "comp" | "comp_endo" => {
            let endo = rule == "comp_endo";
            let c1 = gen_cmd(rng);
            let (c2, c3) = if endo { (c1.clone(), c1.clone()) } else { (gen_cmd(rng), gen_cmd(rng)) };
            let (pre1, pre2) = (assertion(pick(rng, PRES)), assertion(pick(rng, PRES)));
            let (post1, post2, composed) = if endo {
                let (a, b) = (pick(rng, REFLEXIVE), pick(rng, REFLEXIVE));
                (assertion(a), assertion(b), Some(assertion(pick(rng, &[a, b, "true"]))))
            } else {
                match rng.random_range(0..3) {
                    0 => {
                        let vars = ["x", "b", "c"].iter().filter(|_| rng.random_bool(0.6)).map(|s| s.to_string()).collect::<Vec<_>>();
                        let more = ["x", "b", "c"].iter().filter(|_| rng.random_bool(0.6)).map(|s| s.to_string()).collect::<Vec<_>>();
                        (eq_on(&vars), eq_on(&more), None)
                    }
                    1 => (assertion("x<1> <= x<2>"), assertion("x<1> <= x<2>"), Some(assertion("x<1> <= x<2>"))),
                    _ => (assertion(pick(rng, PRES)), assertion(pick(rng, PRES)), Some(assertion(pick(rng, PRES)))),
                }
            };
            if let Some(p) = composed {
                params.insert("post".into(), str_param(p.to_string()));
            }
            let j1 = judgement(w, c1, c2.clone(), pre1, post1, choose_gamma(rng))?;
            let j2 = judgement(w, c2, c3, pre2, post2, choose_gamma(rng))?;
            vec![j1, j2]
        }
        "frame" => {
            let c1 = gen_cmd(rng);
            let c2 = if rng.random_bool(0.6) { c1.clone() } else { gen_cmd(rng) };
            let pre = assertion(pick(rng, PRES));
            let post = choose_post(rng, &c1, &c2, &pre);
            params.insert("theta".into(), str_param(pick(rng, PRES)));
            vec![judgement(w, c1, c2, pre, post, choose_gamma(rng))?]
        }
        "rand" => {
            let c = pick(rng, &["x <$ unif(3)", "x <$ bern(0.25)", "b <$ rr(0.75)(b)", "c <$ rr(0.8)(b)", "b <$ rr(0.5)(c)"]);
            params.insert("cmd".into(), str_param(c));
            params.insert("pre".into(), str_param(pick(rng, PRES)));
            let key = if c.contains("rr") && rng.random_bool(0.5) { "rr" } else { "rand" };
            return Some((key.to_string(), vec![], Params(params)));
        }
        "forall_eq" => {
            let c = parse_cmd(&format!("{}; {}", pick(rng, X_ATOMS), cmd_text(rng, 1))).ok()?;
            let pre = assertion(pick(rng, SYMMETRIC));
            let mut out = Vec::new();
            for i in 0..X_DOMAIN {
                let post = assertion(&format!("(x<1> = {i} => x<2> = {i}) && 0 <= x<1> && x<1> <= 2"));
                out.push(judgement(w, c.clone(), c.clone(), pre.clone(), post, choose_gamma(rng))?);
            }
            params.insert("var".into(), str_param("x"));
            params.insert("lo".into(), num_param(0));
            params.insert("hi".into(), num_param(X_DOMAIN - 1));
            params.insert("pre".into(), str_param(pre.to_string()));
            out
        }
        _ => return None,
    };
    Some((rule.to_string(), premises, Params(params)))
}

enum Outcome {
    Skipped,
    Rejected,
    InvalidPremise,
    Validated,
    Counter(Counterexample),
}

fn trial(w: &World, cfg: &FuzzConfig, t: usize) -> (String, Outcome) {
    let rule = cfg.rules[t % cfg.rules.len()].clone();
    let mut rng = trial_rng(cfg.seed, t as u64);
    let Some((key, premises, params)) = generate(&rule, &mut rng, w) else {
        return (rule, Outcome::Skipped);
    };
    for p in &premises {
        match w.validate(p) {
            Ok(Ok(_)) => {}
            Ok(Err(_)) => return (rule, Outcome::InvalidPremise),
            Err(()) => return (rule, Outcome::Skipped),
        }
    }
    let d = OracleDischarger { world: w };
    let mut ctx = RuleCtx::new(&w.env, &w.machine, &d, Policy::Standard);
    ctx.mutation = cfg.mutation;
    let shown: Vec<String> = premises.iter().map(|p| p.to_string()).collect();
    let concl = match apply_rule(&mut ctx, &key, &params, premises) {
        Ok(j) => j,
        Err(_) => return (rule, Outcome::Rejected),
    };
    match w.validate(&concl) {
        Ok(Ok(0)) | Err(()) => (rule, Outcome::Skipped),
        Ok(Ok(_)) => (rule, Outcome::Validated),
        Ok(Err((i, j, violation))) => (
            rule.clone(),
            Outcome::Counter(Counterexample {
                rule,
                trial: t,
                premises: shown,
                conclusion: concl.to_string(),
                left: w.mems[i].to_string(),
                right: w.mems[j].to_string(),
                violation,
            }),
        ),
    }
}

/// Runs the fuzzer; trials are independent and run in parallel.
pub fn soundness_fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let w = World::new(cfg.support_bound);
    let results: Vec<(String, Outcome)> = (0..cfg.trials).into_par_iter().map(|t| trial(&w, cfg, t)).collect();
    let mut per_rule: BTreeMap<String, RuleStats> = cfg.rules.iter().map(|r| (r.clone(), RuleStats::default())).collect();
    let mut counterexamples = Vec::new();
    let mut invalid_premises = 0;
    for (rule, o) in results {
        let s = per_rule.entry(rule).or_default();
        s.generated += 1;
        match o {
            Outcome::Skipped => s.skipped += 1,
            Outcome::Rejected => s.rejected += 1,
            Outcome::InvalidPremise => invalid_premises += 1,
            Outcome::Validated => s.validated += 1,
            Outcome::Counter(c) => {
                s.validated += 1;
                s.counterexamples += 1;
                counterexamples.push(c);
            }
        }
    }
    FuzzReport {
        seed: cfg.seed,
        trials: cfg.trials,
        mutation: cfg.mutation.map(|m| format!("{m:?}")),
        validated: per_rule.values().map(|s| s.validated).sum(),
        per_rule,
        counterexamples,
        invalid_premises,
    }
}

