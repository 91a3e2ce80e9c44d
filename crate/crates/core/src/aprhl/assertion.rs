//! Relational assertions over pairs of memories.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::num::Rational;
use crate::semantics::Machine;
use crate::syntax::eval::{eval_expr, EvalError, PairScope};
use crate::syntax::lexer::{Cursor, SyntaxError, Tok};
use crate::syntax::parser::parse_expr;
use crate::syntax::types::TypeEnv;
use crate::syntax::{print_expr, Expr, Lit, Side, Ty};
use crate::value::{Memory, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assertion {
    True,
    False,
    /// Boolean relational expression, every program variable side-tagged.
    Atom(Expr),
    /// `Σ_v ‖v<1> − v<2>‖₁ ≤ bound`
    Adj { vars: Vec<String>, bound: Rational },
    Not(Box<Assertion>),
    And(Vec<Assertion>),
    Or(Vec<Assertion>),
    Implies(Box<Assertion>, Box<Assertion>),
}

impl Assertion {
    pub fn atom(e: Expr) -> Self {
        Assertion::Atom(e)
    }

    /// `e1<1> op e2<2>` from untagged expressions.
    pub fn rel(e1: &Expr, op: &str, e2: &Expr) -> Self {
        Assertion::Atom(Expr::bin(op, e1.on_side(Side::Left), e2.on_side(Side::Right)))
    }

    /// Conjunction with `True` units dropped and nested conjunctions flattened.
    pub fn and(parts: impl IntoIterator<Item = Assertion>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Assertion::True => {}
                Assertion::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Assertion::True,
            1 => out.pop().expect("one element"),
            _ => Assertion::And(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Assertion) -> Self {
        match a {
            Assertion::True => Assertion::False,
            Assertion::False => Assertion::True,
            Assertion::Not(inner) => *inner,
            other => Assertion::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Assertion, b: Assertion) -> Self {
        Assertion::Implies(Box::new(a), Box::new(b))
    }

    pub fn conjuncts(&self) -> Vec<&Assertion> {
        match self {
            Assertion::And(ps) => ps.iter().flat_map(|p| p.conjuncts()).collect(),
            Assertion::True => vec![],
            other => vec![other],
        }
    }

    /// Side-tagged variables plus the variables of `adj` constraints (both sides).
    pub fn vars(&self) -> BTreeSet<(String, Side)> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<(String, Side)>) {
        match self {
            Assertion::True | Assertion::False => {}
            Assertion::Atom(e) => e.visit_vars(&mut |n, s| {
                if let Some(s) = s {
                    out.insert((n.to_string(), s));
                }
            }),
            Assertion::Adj { vars, .. } => {
                for v in vars {
                    out.insert((v.clone(), Side::Left));
                    out.insert((v.clone(), Side::Right));
                }
            }
            Assertion::Not(a) => a.collect_vars(out),
            Assertion::And(ps) | Assertion::Or(ps) => ps.iter().for_each(|p| p.collect_vars(out)),
            Assertion::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: &str, side: Side) -> bool {
        self.vars().contains(&(var.to_string(), side))
    }

    fn map_atoms(&self, f: &mut dyn FnMut(&Expr) -> Expr) -> Assertion {
        match self {
            Assertion::Atom(e) => Assertion::Atom(f(e)),
            Assertion::Not(a) => Assertion::Not(Box::new(a.map_atoms(f))),
            Assertion::And(ps) => Assertion::And(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Assertion::Or(ps) => Assertion::Or(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Assertion::Implies(a, b) => Assertion::Implies(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f))),
            other => other.clone(),
        }
    }

    /// `Φ[e/x<side>]`. Fails when `x` occurs inside an `adj` constraint.
    pub fn subst(&self, var: &str, side: Side, e: &Expr) -> Result<Assertion, String> {
        if let Some(Assertion::Adj { .. }) = self.adj_mentioning(var) {
            return Err(format!("cannot substitute for `{var}` inside an adjacency constraint"));
        }
        Ok(self.map_atoms(&mut |a| {
            a.map_vars(&mut |n, s, span| {
                if n == var && s == Some(side) {
                    e.clone()
                } else {
                    Expr::Var { name: n.to_string(), side: s, span }
                }
            })
        }))
    }

    fn adj_mentioning(&self, var: &str) -> Option<&Assertion> {
        match self {
            Assertion::Adj { vars, .. } if vars.iter().any(|v| v == var) => Some(self),
            Assertion::Not(a) => a.adj_mentioning(var),
            Assertion::And(ps) | Assertion::Or(ps) => ps.iter().find_map(|p| p.adj_mentioning(var)),
            Assertion::Implies(a, b) => a.adj_mentioning(var).or_else(|| b.adj_mentioning(var)),
            _ => None,
        }
    }

    /// Drops the top-level conjuncts that mention any of the given variables.
    pub fn erase(&self, vars: &[(&str, Side)]) -> Assertion {
        Assertion::and(
            self.conjuncts()
                .into_iter()
                .filter(|c| !vars.iter().any(|(v, s)| c.mentions(v, *s)))
                .cloned(),
        )
    }

    /// `Φ^op`: sides swapped.
    pub fn opposite(&self) -> Assertion {
        self.map_atoms(&mut |e| e.map_vars(&mut |n, s, span| Expr::Var { name: n.to_string(), side: s.map(Side::flip), span }))
    }

    pub fn eval(&self, m1: &Memory, m2: &Memory, machine: &Machine) -> Result<bool, EvalError> {
        Ok(match self {
            Assertion::True => true,
            Assertion::False => false,
            Assertion::Atom(e) => {
                let scope = PairScope { left: m1, right: m2, globals: &machine.globals };
                eval_expr(e, &scope, &machine.table)?
                    .as_bool()
                    .ok_or_else(|| EvalError::TypeMismatch("assertion atom".into()))?
            }
            Assertion::Adj { vars, bound } => {
                let mut exact = Rational::zero();
                let mut approx = 0.0f64;
                let mut inexact = false;
                for v in vars {
                    let get = |m: &Memory| m.get(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone()));
                    let (a, b) = (get(m1)?, get(m2)?);
                    let (xs, ys) = (coords(&a), coords(&b));
                    if xs.len() != ys.len() {
                        return Err(EvalError::TypeMismatch(format!("adjacency on `{v}`")));
                    }
                    for (x, y) in xs.iter().zip(&ys) {
                        match (x.as_rational(), y.as_rational()) {
                            (Some(p), Some(q)) if !inexact => exact += (p - q).abs(),
                            _ => {
                                inexact = true;
                                approx += (x.as_f64().unwrap_or(f64::NAN) - y.as_f64().unwrap_or(f64::NAN)).abs();
                            }
                        }
                    }
                }
                if inexact {
                    approx + crate::num::rational::to_f64(&exact) <= crate::num::rational::to_f64(bound)
                } else {
                    exact <= *bound
                }
            }
            Assertion::Not(a) => !a.eval(m1, m2, machine)?,
            Assertion::And(ps) => {
                for p in ps {
                    if !p.eval(m1, m2, machine)? {
                        return Ok(false);
                    }
                }
                true
            }
            Assertion::Or(ps) => {
                for p in ps {
                    if p.eval(m1, m2, machine)? {
                        return Ok(true);
                    }
                }
                false
            }
            Assertion::Implies(a, b) => !a.eval(m1, m2, machine)? || b.eval(m1, m2, machine)?,
        })
    }

    /// Every atom must be a boolean with side-tagged program variables; `adj`
    /// variables must be numeric program variables.
    pub fn check(&self, env: &TypeEnv) -> Result<(), String> {
        match self {
            Assertion::True | Assertion::False => Ok(()),
            Assertion::Atom(e) => {
                let mut err = None;
                e.visit_vars(&mut |n, s| {
                    if s.is_none() && !env.is_global(n) && err.is_none() {
                        err = Some(format!("variable `{n}` needs a side tag <1> or <2>"));
                    }
                });
                if let Some(m) = err {
                    return Err(m);
                }
                match env.infer(e, true) {
                    Ok(Ty::Bool) => Ok(()),
                    Ok(t) => Err(format!("`{}` has type {t}, expected bool", print_expr(e))),
                    Err(te) => Err(te.to_string()),
                }
            }
            Assertion::Adj { vars, .. } => {
                for v in vars {
                    match env.var_type(v) {
                        Some(Ty::Bool) | None => return Err(format!("`{v}` is not a numeric program variable")),
                        Some(_) => {}
                    }
                }
                Ok(())
            }
            Assertion::Not(a) => a.check(env),
            Assertion::And(ps) | Assertion::Or(ps) => ps.iter().try_for_each(|p| p.check(env)),
            Assertion::Implies(a, b) => a.check(env).and_then(|_| b.check(env)),
        }
    }
}

fn coords(v: &Value) -> Vec<Value> {
    match v {
        Value::Vector(xs) => xs.clone(),
        other => vec![other.clone()],
    }
}

/// Reads an assertion from a relational expression.
pub fn from_expr(e: &Expr) -> Result<Assertion, String> {
    Ok(match e {
        Expr::Lit(Lit::Bool(true)) => Assertion::True,
        Expr::Lit(Lit::Bool(false)) => Assertion::False,
        Expr::Op { op, args, .. } => match (op.as_str(), args.as_slice()) {
            ("&&", [a, b]) => Assertion::And(vec![from_expr(a)?, from_expr(b)?].into_iter().flat_map(flatten_and).collect()),
            ("||", [a, b]) => Assertion::Or(vec![from_expr(a)?, from_expr(b)?].into_iter().flat_map(flatten_or).collect()),
            ("!", [a]) => Assertion::Not(Box::new(from_expr(a)?)),
            ("=>", [a, b]) => Assertion::Implies(Box::new(from_expr(a)?), Box::new(from_expr(b)?)),
            ("adj", [vars @ .., bound]) if !vars.is_empty() => {
                let bound = match bound {
                    Expr::Lit(Lit::Int(n)) => Rational::from_integer(n.clone()),
                    Expr::Lit(Lit::Real(q)) => q.clone(),
                    _ => return Err("adj bound must be a numeric literal".into()),
                };
                let mut names = Vec::new();
                for v in vars {
                    match v {
                        Expr::Var { name, side: None, .. } => names.push(name.clone()),
                        _ => return Err("adj expects untagged variable names".into()),
                    }
                }
                Assertion::Adj { vars: names, bound }
            }
            ("adj", _) => return Err("adj expects variables followed by a bound".into()),
            _ => Assertion::Atom(e.clone()),
        },
        _ => Assertion::Atom(e.clone()),
    })
}

fn flatten_and(a: Assertion) -> Vec<Assertion> {
    match a {
        Assertion::And(ps) => ps,
        other => vec![other],
    }
}

fn flatten_or(a: Assertion) -> Vec<Assertion> {
    match a {
        Assertion::Or(ps) => ps,
        other => vec![other],
    }
}

pub fn parse_assertion_at(cur: &mut Cursor) -> Result<Assertion, SyntaxError> {
    let span = cur.span();
    let e = parse_expr(cur, true)?;
    from_expr(&e).map_err(|m| SyntaxError::new(span, m))
}

pub fn parse_assertion(text: &str) -> Result<Assertion, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let a = parse_assertion_at(&mut cur)?;
    if !cur.at(&Tok::Eof) {
        return Err(cur.error("unexpected input after assertion"));
    }
    Ok(a)
}

fn prec(a: &Assertion) -> u8 {
    match a {
        Assertion::Implies(..) => 0,
        Assertion::Or(_) => 1,
        Assertion::And(_) => 2,
        _ => 3,
    }
}

fn write_paren(f: &mut fmt::Formatter<'_>, a: &Assertion, min: u8) -> fmt::Result {
    if prec(a) < min {
        write!(f, "({a})")
    } else {
        write!(f, "{a}")
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::True => write!(f, "true"),
            Assertion::False => write!(f, "false"),
            Assertion::Atom(e) => {
                // atoms containing connectives need parentheses to reparse the same way
                match e {
                    Expr::Op { op, .. } if matches!(op.as_str(), "&&" | "||" | "=>") => write!(f, "({})", print_expr(e)),
                    _ => write!(f, "{}", print_expr(e)),
                }
            }
            Assertion::Adj { vars, bound } => {
                write!(f, "adj({}, {})", vars.join(", "), print_expr(&Expr::real(bound.clone())).trim_end_matches(".0"))
            }
            Assertion::Not(a) => {
                write!(f, "!")?;
                write_paren(f, a, 3)
            }
            Assertion::And(ps) | Assertion::Or(ps) => {
                let (sep, p) = if matches!(self, Assertion::And(_)) { (" && ", 3) } else { (" || ", 2) };
                for (i, x) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    write_paren(f, x, p)?;
                }
                Ok(())
            }
            Assertion::Implies(a, b) => {
                write_paren(f, a, 1)?;
                write!(f, " => ")?;
                write_paren(f, b, 0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        for src in [
            "x<1> = x<2> && y<1> <= y<2>",
            "adj(d, 1) && (r<1> = 4 => r<2> = 4)",
            "!(a<1> || b<2>) => c<1>",
            "T<1> + 1 = T<2>",
        ] {
            let a = parse_assertion(src).unwrap();
            let again = parse_assertion(&a.to_string()).unwrap();
            assert_eq!(a, again, "{src} printed as {a}");
        }
    }

    #[test]
    fn erase_and_opposite() {
        let a = parse_assertion("x<1> = x<2> && y<1> < 3 && adj(d, 1)").unwrap();
        assert_eq!(a.erase(&[("x", Side::Left)]), parse_assertion("y<1> < 3 && adj(d, 1)").unwrap());
        assert_eq!(a.opposite(), parse_assertion("x<2> = x<1> && y<2> < 3 && adj(d, 1)").unwrap());
        assert_eq!(a.opposite().opposite(), a);
    }

    #[test]
    fn substitution() {
        let a = parse_assertion("r<1> = j<1> && r<2> = 0").unwrap();
        let b = a.subst("r", Side::Left, &Expr::bin("+", Expr::side_var("j", Side::Left), Expr::int(1))).unwrap();
        assert_eq!(b, parse_assertion("j<1> + 1 = j<1> && r<2> = 0").unwrap());
        let adj = parse_assertion("adj(d, 1)").unwrap();
        assert!(adj.subst("d", Side::Left, &Expr::int(0)).is_err());
    }
}
