//! Refutation procedure for quantifier-free linear arithmetic with
//! propositional structure: case splitting down to conjunctions of literals,
//! then Fourier–Motzkin elimination with integer tightening. Sound, incomplete.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::assertion::Assertion;
use crate::num::Rational;
use crate::semantics::Machine;
use crate::syntax::types::TypeEnv;
use crate::syntax::{print_expr, Expr, Lit, Side, Ty};
use crate::value::{Memory, Value};

/// `Σ coeffs·atom + constant`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lin {
    coeffs: BTreeMap<usize, Rational>,
    constant: Rational,
}

impl Lin {
    fn constant(c: Rational) -> Self {
        Lin { coeffs: BTreeMap::new(), constant: c }
    }

    fn atom(id: usize) -> Self {
        Lin { coeffs: [(id, Rational::one())].into_iter().collect(), constant: Rational::zero() }
    }

    fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_scaled(&self, other: &Lin, k: &Rational) -> Lin {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(*v).or_insert_with(Rational::zero);
            *e += c * k;
            if e.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out.constant += &other.constant * k;
        out
    }

    fn scale(&self, k: &Rational) -> Lin {
        Lin::constant(Rational::zero()).add_scaled(self, k)
    }

    fn sub(&self, other: &Lin) -> Lin {
        self.add_scaled(other, &-Rational::one())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Rel {
    Le,
    Lt,
    Eq,
}

/// `lin rel 0`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Constraint {
    lin: Lin,
    rel: Rel,
}

#[derive(Clone, Debug)]
enum Literal {
    Prop(String, bool),
    Arith(Constraint),
}

#[derive(Clone, Debug)]
enum F {
    Lit(Literal),
    And(Vec<F>),
    Or(Vec<F>),
}

fn f_true() -> F {
    F::And(vec![])
}

fn f_false() -> F {
    F::Or(vec![])
}

/// Outcome of a refutation attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The hypothesis entails the goal.
    Proved { used_annotation: bool },
    Unknown,
}

const LEAF_BUDGET: usize = 200_000;
const CONSTRAINT_BUDGET: usize = 4_000;

pub struct Prover<'a> {
    env: &'a TypeEnv,
    machine: &'a Machine,
    atoms: Vec<(Expr, bool)>,
    atom_ids: HashMap<Expr, usize>,
    leaves: usize,
}

impl<'a> Prover<'a> {
    pub fn new(env: &'a TypeEnv, machine: &'a Machine) -> Self {
        Prover { env, machine, atoms: Vec::new(), atom_ids: HashMap::new(), leaves: 0 }
    }

    /// Tries to show `hyp ⇒ goal` by refuting `hyp ∧ ¬goal`.
    pub fn prove(&mut self, hyp: &Assertion, goal: &Assertion) -> Outcome {
        self.leaves = 0;
        let h = self.convert(hyp, true);
        let g = self.convert(goal, false);
        let axioms = self.sensitivity_axioms(hyp);
        let used_annotation = !axioms.is_empty();
        let mut pending = vec![h, g];
        if self.satisfiable(Vec::new(), pending.clone()) == Some(false) {
            return Outcome::Proved { used_annotation: false };
        }
        if !used_annotation {
            return Outcome::Unknown;
        }
        pending.extend(axioms);
        self.leaves = 0;
        match self.satisfiable(Vec::new(), pending) {
            Some(false) => Outcome::Proved { used_annotation: true },
            _ => Outcome::Unknown,
        }
    }

    fn intern(&mut self, e: &Expr) -> usize {
        if let Some(id) = self.atom_ids.get(e) {
            return *id;
        }
        let is_int = matches!(self.env.infer(e, true), Ok(Ty::Int));
        let id = self.atoms.len();
        self.atoms.push((e.clone(), is_int));
        self.atom_ids.insert(e.clone(), id);
        id
    }

    fn ground_value(&self, e: &Expr) -> Option<Value> {
        let mut has_side = false;
        e.visit_vars(&mut |n, s| has_side |= s.is_some() || !self.env.is_global(n));
        if has_side {
            return None;
        }
        self.machine.eval(e, &Memory::new()).ok()
    }

    fn linearize(&mut self, e: &Expr) -> Lin {
        if let Some(v) = self.ground_value(e) {
            if let Some(q) = v.as_rational() {
                return Lin::constant(q);
            }
        }
        match e {
            Expr::Lit(Lit::Int(n)) => return Lin::constant(Rational::from_integer(n.clone())),
            Expr::Lit(Lit::Real(q)) => return Lin::constant(q.clone()),
            Expr::Op { op, args, .. } => match (op.as_str(), args.as_slice()) {
                ("+", [a, b]) => {
                    let (a, b) = (self.linearize(a), self.linearize(b));
                    return a.add_scaled(&b, &Rational::one());
                }
                ("-", [a, b]) => {
                    let (a, b) = (self.linearize(a), self.linearize(b));
                    return a.sub(&b);
                }
                ("neg", [a]) => return self.linearize(a).scale(&-Rational::one()),
                ("*", [a, b]) => {
                    let (la, lb) = (self.linearize(a), self.linearize(b));
                    if la.is_constant() {
                        return lb.scale(&la.constant);
                    }
                    if lb.is_constant() {
                        return la.scale(&lb.constant);
                    }
                }
                ("/", [a, b]) => {
                    let lb = self.linearize(b);
                    if lb.is_constant() && !lb.constant.is_zero() {
                        let la = self.linearize(a);
                        return la.scale(&lb.constant.recip());
                    }
                }
                _ => {}
            },
            _ => {}
        }
        Lin::atom(self.intern(e))
    }

    fn is_numeric(&self, e: &Expr) -> bool {
        matches!(self.env.infer(e, true), Ok(Ty::Int | Ty::Real))
    }

    fn is_boolean(&self, e: &Expr) -> bool {
        matches!(self.env.infer(e, true), Ok(Ty::Bool))
    }

    fn prop(&self, key: String, pos: bool) -> F {
        F::Lit(Literal::Prop(key, pos))
    }

    fn arith(lin: Lin, rel: Rel) -> F {
        F::Lit(Literal::Arith(Constraint { lin, rel }))
    }

    fn convert(&mut self, a: &Assertion, pos: bool) -> F {
        match a {
            Assertion::True => if pos { f_true() } else { f_false() },
            Assertion::False => if pos { f_false() } else { f_true() },
            Assertion::Atom(e) => self.convert_expr(e, pos),
            Assertion::Adj { .. } => self.prop(a.to_string(), pos),
            Assertion::Not(x) => self.convert(x, !pos),
            Assertion::And(ps) => {
                let parts = ps.iter().map(|p| self.convert(p, pos)).collect();
                if pos { F::And(parts) } else { F::Or(parts) }
            }
            Assertion::Or(ps) => {
                let parts = ps.iter().map(|p| self.convert(p, pos)).collect();
                if pos { F::Or(parts) } else { F::And(parts) }
            }
            Assertion::Implies(x, y) => {
                let (nx, y) = (self.convert(x, !pos), self.convert(y, pos));
                if pos { F::Or(vec![nx, y]) } else { F::And(vec![nx, y]) }
            }
        }
    }

    fn convert_expr(&mut self, e: &Expr, pos: bool) -> F {
        if let Some(Value::Bool(b)) = self.ground_value(e) {
            return if b == pos { f_true() } else { f_false() };
        }
        if let Expr::Op { op, args, .. } = e {
            match (op.as_str(), args.as_slice()) {
                ("&&", [a, b]) | ("||", [a, b]) => {
                    let parts = vec![self.convert_expr(a, pos), self.convert_expr(b, pos)];
                    return if (op == "&&") == pos { F::And(parts) } else { F::Or(parts) };
                }
                ("=>", [a, b]) => {
                    let parts = vec![self.convert_expr(a, !pos), self.convert_expr(b, pos)];
                    return if pos { F::Or(parts) } else { F::And(parts) };
                }
                ("!", [a]) => return self.convert_expr(a, !pos),
                ("=" | "!=", [a, b]) if self.is_boolean(a) => {
                    // a = b  ≡  (a ∧ b) ∨ (¬a ∧ ¬b)
                    let same = (op == "=") == pos;
                    let (pa, pb, na, nb) =
                        (self.convert_expr(a, true), self.convert_expr(b, same), self.convert_expr(a, false), self.convert_expr(b, !same));
                    return F::Or(vec![F::And(vec![pa, pb]), F::And(vec![na, nb])]);
                }
                ("<" | "<=" | ">" | ">=" | "=" | "!=", [a, b]) if self.is_numeric(a) && self.is_numeric(b) => {
                    let d = self.linearize(a).sub(&self.linearize(b));
                    let neg = d.scale(&-Rational::one());
                    let op = if pos {
                        op.as_str()
                    } else {
                        match op.as_str() {
                            "<" => ">=",
                            "<=" => ">",
                            ">" => "<=",
                            ">=" => "<",
                            "=" => "!=",
                            _ => "=",
                        }
                    };
                    return match op {
                        "<" => Self::arith(d, Rel::Lt),
                        "<=" => Self::arith(d, Rel::Le),
                        ">" => Self::arith(neg, Rel::Lt),
                        ">=" => Self::arith(neg, Rel::Le),
                        "=" => Self::arith(d, Rel::Eq),
                        _ => F::Or(vec![Self::arith(d, Rel::Lt), Self::arith(neg, Rel::Lt)]),
                    };
                }
                _ => {}
            }
        }
        self.prop(print_expr(e), pos)
    }

    /// For every annotated operation applied to an `adj`-constrained argument:
    /// either some other argument differs across sides, or the two results
    /// are within `sensitivity · bound`.
    fn sensitivity_axioms(&mut self, hyp: &Assertion) -> Vec<F> {
        let adj: Vec<(Vec<String>, Rational)> = hyp
            .conjuncts()
            .into_iter()
            .filter_map(|c| match c {
                Assertion::Adj { vars, bound } => Some((vars.clone(), bound.clone())),
                _ => None,
            })
            .collect();
        if adj.is_empty() {
            return vec![];
        }
        let mut out = Vec::new();
        let mut done = BTreeSet::new();
        let mut i = 0;
        while i < self.atoms.len() {
            let (e, _) = self.atoms[i].clone();
            i += 1;
            let Expr::Op { op, args, .. } = &e else { continue };
            let Some((pos, k)) = self.env.sensitivity(op) else { continue };
            let Some(Expr::Var { name, side: Some(_), .. }) = args.get(pos) else { continue };
            let Some(bound) = adj.iter().filter(|(vs, _)| vs.contains(name)).map(|(_, b)| b.clone()).min() else {
                continue;
            };
            let flipped = e.map_vars(&mut |n, s, span| Expr::Var { name: n.to_string(), side: s.map(Side::flip), span });
            let key = if e < flipped { (e.clone(), flipped.clone()) } else { (flipped.clone(), e.clone()) };
            if !done.insert(key) {
                continue;
            }
            let mut cases = Vec::new();
            let mut ok = true;
            for (j, a) in args.iter().enumerate() {
                if j == pos {
                    continue;
                }
                let fa = a.map_vars(&mut |n, s, span| Expr::Var { name: n.to_string(), side: s.map(Side::flip), span });
                if fa == *a {
                    continue;
                }
                if !self.is_numeric(a) {
                    ok = false;
                    break;
                }
                let d = self.linearize(a).sub(&self.linearize(&fa));
                let neg = d.scale(&-Rational::one());
                cases.push(Self::arith(d, Rel::Lt));
                cases.push(Self::arith(neg, Rel::Lt));
            }
            if !ok {
                continue;
            }
            let (t1, t2) = (self.linearize(&e), self.linearize(&flipped));
            let diff = t1.sub(&t2);
            let limit = Lin::constant(&k * &bound);
            cases.push(F::And(vec![
                Self::arith(diff.sub(&limit), Rel::Le),
                Self::arith(diff.scale(&-Rational::one()).sub(&limit), Rel::Le),
            ]));
            out.push(F::Or(cases));
        }
        out
    }

    /// `Some(false)` when the conjunction of `lits` and `pending` is refuted,
    /// `None` when the search budget ran out.
    fn satisfiable(&mut self, mut lits: Vec<Literal>, mut pending: Vec<F>) -> Option<bool> {
        // absorb conjunctions and literals before branching
        let mut ors = Vec::new();
        while let Some(f) = pending.pop() {
            match f {
                F::Lit(l) => lits.push(l),
                F::And(ps) => pending.extend(ps),
                F::Or(mut ps) => {
                    if ps.len() == 1 {
                        pending.push(ps.pop().expect("one element"));
                    } else {
                        ors.push(ps);
                    }
                }
            }
        }
        if ors.iter().any(|o| o.is_empty()) {
            return Some(false);
        }
        self.leaves += 1;
        if self.leaves > LEAF_BUDGET {
            return None;
        }
        if self.refuted(&lits) {
            return Some(false);
        }
        let Some(branch) = ors.pop() else { return Some(true) };
        let rest: Vec<F> = ors.into_iter().map(F::Or).collect();
        let mut unknown = false;
        for choice in branch {
            let mut p = rest.clone();
            p.push(choice);
            match self.satisfiable(lits.clone(), p) {
                Some(true) => return Some(true),
                None => unknown = true,
                Some(false) => {}
            }
        }
        if unknown { None } else { Some(false) }
    }

    fn refuted(&self, lits: &[Literal]) -> bool {
        let mut props: HashMap<&str, bool> = HashMap::new();
        let mut cons = Vec::new();
        for l in lits {
            match l {
                Literal::Prop(k, v) => {
                    if let Some(prev) = props.insert(k, *v) {
                        if prev != *v {
                            return true;
                        }
                    }
                }
                Literal::Arith(c) => cons.push(c.clone()),
            }
        }
        fourier_motzkin(cons, &|v| self.atoms[v].1)
    }
}

fn lcm_denominators(l: &Lin) -> num_bigint::BigInt {
    l.coeffs.values().fold(num_bigint::BigInt::one(), |acc, c| acc.lcm(c.denom()))
}

/// Normalizes a constraint whose atoms are all integers: integer coefficients
/// with gcd 1 and an integral bound, strict inequalities made non-strict.
/// Returns `None` when the constraint is unsatisfiable over the integers.
fn tighten(c: Constraint, is_int: &dyn Fn(usize) -> bool) -> Option<Constraint> {
    if c.lin.coeffs.is_empty() || !c.lin.coeffs.keys().all(|v| is_int(*v)) {
        return Some(c);
    }
    let l = Rational::from_integer(lcm_denominators(&c.lin));
    let scaled = c.lin.scale(&l);
    let g = scaled.coeffs.values().fold(num_bigint::BigInt::zero(), |acc, q| acc.gcd(q.numer()));
    let lin = scaled.scale(&Rational::from_integer(g).recip());
    // Σ b x + k rel 0  ⇔  Σ b x rel −k
    let rhs = -lin.constant.clone();
    let bound = match c.rel {
        Rel::Le => rhs.floor(),
        Rel::Lt => {
            let f = rhs.floor();
            if f == rhs { f - Rational::one() } else { f }
        }
        Rel::Eq => {
            if !rhs.is_integer() {
                return None;
            }
            rhs
        }
    };
    let rel = if c.rel == Rel::Eq { Rel::Eq } else { Rel::Le };
    Some(Constraint { lin: Lin { coeffs: lin.coeffs, constant: -bound }, rel })
}

fn trivially_false(c: &Constraint) -> bool {
    c.lin.coeffs.is_empty()
        && match c.rel {
            Rel::Le => c.lin.constant.is_positive(),
            Rel::Lt => !c.lin.constant.is_negative(),
            Rel::Eq => !c.lin.constant.is_zero(),
        }
}

/// `true` when the constraints have no real (integer-tightened) solution.
fn fourier_motzkin(cons: Vec<Constraint>, is_int: &dyn Fn(usize) -> bool) -> bool {
    let mut cons: Vec<Constraint> = {
        let mut out = Vec::new();
        for c in cons {
            match tighten(c, is_int) {
                None => return true,
                Some(c) => out.push(c),
            }
        }
        out
    };
    // equalities by substitution
    while let Some(idx) = cons.iter().position(|c| c.rel == Rel::Eq && !c.lin.coeffs.is_empty()) {
        let eq = cons.swap_remove(idx);
        let (&v, a) = eq.lin.coeffs.iter().next().expect("non-constant");
        // v = −(eq − a·v)/a
        let k = -a.recip();
        let mut next = Vec::with_capacity(cons.len());
        for c in cons {
            let coef = c.lin.coeffs.get(&v).cloned();
            let c = match coef {
                Some(b) => Constraint { lin: c.lin.add_scaled(&eq.lin, &(&b * &k)), rel: c.rel },
                None => c,
            };
            match tighten(c, is_int) {
                None => return true,
                Some(c) => next.push(c),
            }
        }
        cons = next;
    }
    if cons.iter().any(trivially_false) {
        return true;
    }
    let mut seen: BTreeSet<Constraint> = BTreeSet::new();
    cons.retain(|c| !c.lin.coeffs.is_empty() && seen.insert(c.clone()));
    loop {
        let vars: BTreeSet<usize> = cons.iter().flat_map(|c| c.lin.coeffs.keys().copied()).collect();
        let Some(&v) = vars.iter().min_by_key(|v| {
            let pos = cons.iter().filter(|c| c.lin.coeffs.get(v).is_some_and(|a| a.is_positive())).count();
            let neg = cons.iter().filter(|c| c.lin.coeffs.get(v).is_some_and(|a| a.is_negative())).count();
            pos * neg
        }) else {
            return false;
        };
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for c in cons {
            match c.lin.coeffs.get(&v).map(|a| a.is_positive()) {
                Some(true) => pos.push(c),
                Some(false) => neg.push(c),
                None => rest.push(c),
            }
        }
        for p in &pos {
            for n in &neg {
                let a = p.lin.coeffs[&v].clone();
                let b = -n.lin.coeffs[&v].clone();
                // b·p + a·n cancels v
                let lin = p.lin.scale(&b).add_scaled(&n.lin, &a);
                let rel = if p.rel == Rel::Lt || n.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                let Some(c) = tighten(Constraint { lin, rel }, is_int) else { return true };
                if trivially_false(&c) {
                    return true;
                }
                if !c.lin.coeffs.is_empty() && seen.insert(c.clone()) {
                    rest.push(c);
                }
            }
        }
        if rest.len() > CONSTRAINT_BUDGET {
            return false;
        }
        cons = rest;
    }
}
