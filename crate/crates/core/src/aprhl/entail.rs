//! Discharging implications between assertions.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::assertion::Assertion;
use super::linarith::{Outcome, Prover};
use crate::num::Rational;
use crate::semantics::sample::trial_rng;
use crate::semantics::Machine;
use crate::syntax::types::TypeEnv;
use crate::syntax::{Expr, Side, Ty};
use crate::value::{Memory, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Syntactic,
    Arithmetic,
    /// Arithmetic that relied on a declared sensitivity annotation.
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Verified { method: Method },
    Tested { samples: usize, exhaustive: bool, seed: u64 },
    Refuted { left: String, right: String },
    Assumed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Verified { method } => write!(f, "verified ({method:?})"),
            Verdict::Tested { samples, exhaustive: true, .. } => write!(f, "tested exhaustively ({samples} pairs)"),
            Verdict::Tested { samples, seed, .. } => write!(f, "tested on {samples} random pairs (seed {seed})"),
            Verdict::Refuted { left, right } => write!(f, "refuted by m1 = {left}, m2 = {right}"),
            Verdict::Assumed => write!(f, "assumed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Only `Verified`.
    Strict,
    /// `Verified` or exhaustive `Tested`.
    #[default]
    Standard,
    /// Anything but `Refuted`.
    Permissive,
}

impl Policy {
    pub fn accepts(self, v: &Verdict) -> bool {
        match (self, v) {
            (_, Verdict::Verified { .. }) => true,
            (_, Verdict::Refuted { .. }) => false,
            (Policy::Strict, _) => false,
            (Policy::Standard, Verdict::Tested { exhaustive, .. }) => *exhaustive,
            (Policy::Standard, Verdict::Assumed) => true,
            (Policy::Permissive, _) => true,
        }
    }

    pub fn parse(s: &str) -> Option<Policy> {
        match s {
            "strict" => Some(Policy::Strict),
            "standard" => Some(Policy::Standard),
            "permissive" => Some(Policy::Permissive),
            _ => None,
        }
    }
}

pub const EXHAUSTIVE_LIMIT: usize = 100_000;

#[derive(Clone)]
pub struct Entailer<'a> {
    pub env: &'a TypeEnv,
    pub machine: &'a Machine,
    pub seed: u64,
    pub samples: usize,
    /// Random reals are drawn from `[-box, box]`.
    pub real_box: i64,
}

impl<'a> Entailer<'a> {
    pub fn new(env: &'a TypeEnv, machine: &'a Machine, seed: u64) -> Self {
        Entailer { env, machine, seed, samples: 10_000, real_box: 10 }
    }

    pub fn entails(&self, a: &Assertion, b: &Assertion) -> Verdict {
        let hyps = a.conjuncts();
        if hyps.contains(&&Assertion::False) {
            return Verdict::Verified { method: Method::Syntactic };
        }
        let open: Vec<&Assertion> = b.conjuncts().into_iter().filter(|g| !syntactic(&hyps, g)).collect();
        if open.is_empty() {
            return Verdict::Verified { method: Method::Syntactic };
        }
        let mut prover = Prover::new(self.env, self.machine);
        let mut annotated = false;
        let mut proved = true;
        for g in &open {
            match prover.prove(a, g) {
                Outcome::Proved { used_annotation } => annotated |= used_annotation,
                Outcome::Unknown => {
                    proved = false;
                    break;
                }
            }
        }
        if proved {
            let method = if annotated { Method::Annotation } else { Method::Arithmetic };
            return Verdict::Verified { method };
        }
        self.test(a, b)
    }

    /// Evaluates the implication on generated memory pairs.
    pub fn test(&self, a: &Assertion, b: &Assertion) -> Verdict {
        let mut vars: Vec<(String, Side, Ty)> = Vec::new();
        for (n, s) in a.vars().into_iter().chain(b.vars()) {
            if let Some(t) = self.env.var_type(&n) {
                if !vars.iter().any(|(m, r, _)| *m == n && *r == s) {
                    vars.push((n, s, t.clone()));
                }
            }
        }
        let base = self.env.default_memory();
        let check = |vals: &[Value]| -> Option<(Memory, Memory)> {
            let (mut m1, mut m2) = (base.clone(), base.clone());
            for ((n, s, _), v) in vars.iter().zip(vals) {
                match s {
                    Side::Left => m1.set(n, v.clone()),
                    Side::Right => m2.set(n, v.clone()),
                }
            }
            let holds = a.eval(&m1, &m2, self.machine).ok()? && !b.eval(&m1, &m2, self.machine).ok()?;
            holds.then_some((m1, m2))
        };
        let refuted = |(m1, m2): (Memory, Memory)| Verdict::Refuted { left: m1.to_string(), right: m2.to_string() };

        let all_bool = vars.iter().all(|(_, _, t)| *t == Ty::Bool);
        if all_bool && vars.len() <= 16 {
            let n = 1usize << vars.len();
            for mask in 0..n {
                let vals: Vec<Value> = (0..vars.len()).map(|i| Value::Bool(mask >> i & 1 == 1)).collect();
                if let Some(cx) = check(&vals) {
                    return refuted(cx);
                }
            }
            return Verdict::Tested { samples: n, exhaustive: true, seed: self.seed };
        }

        // boundary grid first, then random points
        let grid: Vec<Vec<Value>> = vars.iter().map(|(_, _, t)| boundary_values(t)).collect();
        let grid_size = grid.iter().map(|g| g.len()).try_fold(1usize, |acc, k| acc.checked_mul(k));
        let mut tried = 0usize;
        if let Some(total) = grid_size.filter(|t| *t <= self.samples / 2) {
            for mut idx in 0..total {
                let mut vals = Vec::with_capacity(vars.len());
                for g in &grid {
                    vals.push(g[idx % g.len()].clone());
                    idx /= g.len();
                }
                if let Some(cx) = check(&vals) {
                    return refuted(cx);
                }
                tried += 1;
            }
        }
        let mut rng = trial_rng(self.seed, 0);
        while tried < self.samples {
            let vals: Vec<Value> = vars.iter().map(|(_, _, t)| self.random_value(t, &mut rng)).collect();
            if let Some(cx) = check(&vals) {
                return refuted(cx);
            }
            tried += 1;
        }
        Verdict::Tested { samples: tried, exhaustive: false, seed: self.seed }
    }

    /// Exhaustive check over an explicit finite set of memory pairs.
    pub fn entails_over<'m>(&self, a: &Assertion, b: &Assertion, pairs: impl IntoIterator<Item = (&'m Memory, &'m Memory)>) -> Verdict {
        let mut n = 0;
        for (m1, m2) in pairs {
            n += 1;
            if a.eval(m1, m2, self.machine).unwrap_or(false) && !b.eval(m1, m2, self.machine).unwrap_or(true) {
                return Verdict::Refuted { left: m1.to_string(), right: m2.to_string() };
            }
        }
        Verdict::Tested { samples: n, exhaustive: true, seed: self.seed }
    }

    fn random_value<R: Rng>(&self, t: &Ty, rng: &mut R) -> Value {
        match t {
            Ty::Bool => Value::Bool(rng.random()),
            Ty::Int => Value::int(rng.random_range(-8..=8)),
            Ty::Vec(n) => Value::Vector((0..*n).map(|_| self.random_value(&Ty::Real, rng)).collect()),
            _ => Value::Real(Rational::new(rng.random_range(-4 * self.real_box..=4 * self.real_box).into(), 4.into())),
        }
    }
}

fn boundary_values(t: &Ty) -> Vec<Value> {
    match t {
        Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Ty::Int => vec![Value::int(0), Value::int(1), Value::int(-1)],
        Ty::Vec(n) => [0, 1, -1].iter().map(|k| Value::Vector(vec![Value::real(Rational::from_integer((*k).into())); *n])).collect(),
        _ => [0, 1, -1].iter().map(|k| Value::real(Rational::from_integer((*k).into()))).collect(),
    }
}

/// Goal conjuncts closed without arithmetic.
fn syntactic(hyps: &[&Assertion], goal: &Assertion) -> bool {
    if matches!(goal, Assertion::True) || hyps.contains(&goal) {
        return true;
    }
    match goal {
        Assertion::Atom(Expr::Op { op, args, .. }) if matches!(op.as_str(), "=" | "<=" | ">=") && args.len() == 2 => {
            args[0] == args[1]
        }
        Assertion::Adj { vars, bound } => hyps.iter().any(|h| match h {
            Assertion::Adj { vars: hv, bound: hb } => hb <= bound && vars.iter().all(|v| hv.contains(v)),
            _ => false,
        }),
        Assertion::And(ps) => ps.iter().all(|p| syntactic(hyps, p)),
        Assertion::Implies(p, q) => {
            let mut extended: Vec<&Assertion> = hyps.to_vec();
            extended.extend(p.conjuncts());
            syntactic(&extended, q)
        }
        Assertion::Or(ps) => ps.iter().any(|p| syntactic(hyps, p)),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::assertion::parse_assertion;
    use super::*;
    use crate::syntax::{parse, OpTable};

    fn with_env<T>(f: impl FnOnce(&Entailer) -> T) -> T {
        let p = parse(
            "type data = vec_real(3); const Q: int = 3; op eval(int, int, data) -> real sensitivity(data, 1); \
             var x:int, y:int, j:int, d:data, a:bool, b:bool; skip",
        )
        .unwrap();
        let (m, env) = Machine::for_program(&p, &OpTable::default(), &Default::default()).unwrap();
        f(&Entailer::new(&env, &m, 1))
    }

    fn verdict(a: &str, b: &str) -> Verdict {
        with_env(|e| e.entails(&parse_assertion(a).unwrap(), &parse_assertion(b).unwrap()))
    }

    #[test]
    fn examples() {
        assert_eq!(verdict("x<1> = x<2> && y<1> <= y<2>", "x<1> = x<2>"), Verdict::Verified { method: Method::Syntactic });
        assert_eq!(
            verdict("adj(d, 1) && j<1> = j<2>", "eval(Q, j<1>, d<1>) - eval(Q, j<2>, d<2>) <= 1"),
            Verdict::Verified { method: Method::Annotation }
        );
        match verdict("x<1> <= y<2>", "x<1> < y<2>") {
            Verdict::Refuted { left, right } => {
                assert!(left.contains("x=0"), "{left}");
                assert!(right.contains("y=0"), "{right}");
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(verdict("a<1> && b<2>", "a<1> || b<1>"), Verdict::Verified { method: Method::Syntactic });
        assert!(matches!(verdict("a<1> = b<2>", "!a<1> || b<2>"), Verdict::Verified { .. }));
    }

    #[test]
    fn policy_levels() {
        let tested = Verdict::Tested { samples: 10, exhaustive: false, seed: 0 };
        let exhaustive = Verdict::Tested { samples: 10, exhaustive: true, seed: 0 };
        assert!(!Policy::Strict.accepts(&exhaustive));
        assert!(Policy::Standard.accepts(&exhaustive));
        assert!(!Policy::Standard.accepts(&tested));
        assert!(Policy::Permissive.accepts(&tested));
        assert!(!Policy::Permissive.accepts(&Verdict::Refuted { left: String::new(), right: String::new() }));
    }
}
