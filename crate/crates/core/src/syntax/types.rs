//! Typing of pWHILE programs and assertions.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;
use super::eval::{eval_in, EvalError};
use super::lexer::Span;
use super::ops::OpTable;
use crate::num::Rational;
use crate::value::{Memory, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnboundVariable(String),
    UnknownType(String),
    GuardNotBool(Ty),
    Mismatch { context: String, expected: String, found: Ty },
    Arity { op: String, expected: usize, found: usize },
    UnknownOperation(String),
    SideTagInProgram(String),
    BadDeclaration(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type error at {span}: {kind:?}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
}

fn err<T>(kind: TypeErrorKind, span: Span) -> Result<T, TypeError> {
    Err(TypeError { kind, span })
}

/// Resolved typing environment: type aliases, globals, operation signatures.
#[derive(Debug, Clone)]
pub struct TypeEnv {
    aliases: BTreeMap<String, Ty>,
    globals: BTreeMap<String, Ty>,
    ops: BTreeMap<String, OpDecl>,
    pub ctx: TypingContext,
    table: OpTable,
}

impl TypeEnv {
    pub fn new(prelude: &Prelude, ctx: &TypingContext, table: &OpTable) -> Result<Self, TypeError> {
        let mut env = TypeEnv {
            aliases: BTreeMap::new(),
            globals: BTreeMap::new(),
            ops: BTreeMap::new(),
            ctx: TypingContext::new(),
            table: table.clone(),
        };
        for t in &prelude.types {
            let r = env.resolve(&t.def, Span::default())?;
            if env.aliases.insert(t.name.clone(), r).is_some() {
                return err(TypeErrorKind::BadDeclaration(format!("type `{}` declared twice", t.name)), Span::default());
            }
        }
        for o in &prelude.ops {
            for a in o.args.iter().chain([&o.ret]) {
                env.resolve(a, Span::default())?;
            }
            if let Some((arg, _)) = &o.sensitivity {
                if !o.args.iter().any(|t| matches!(t, Ty::Named(n) if n == arg)) {
                    return err(
                        TypeErrorKind::BadDeclaration(format!("sensitivity of `{}` names no argument type `{arg}`", o.name)),
                        Span::default(),
                    );
                }
            }
            env.ops.insert(o.name.clone(), o.clone());
        }
        for g in &prelude.globals {
            let declared = env.resolve(&g.ty, g.value.span())?;
            let found = env.infer(&g.value, false)?;
            env.expect_assignable(&declared, &found, &format!("declaration of `{}`", g.name), g.value.span())?;
            env.globals.insert(g.name.clone(), declared);
        }
        for (name, ty) in ctx.iter() {
            let r = env.resolve(ty, Span::default())?;
            if env.globals.contains_key(name) {
                return err(TypeErrorKind::BadDeclaration(format!("`{name}` is both a variable and a constant")), Span::default());
            }
            env.ctx.declare(name, r);
        }
        Ok(env)
    }

    pub fn for_program(p: &Program, table: &OpTable) -> Result<Self, TypeError> {
        Self::new(&p.prelude, &p.ctx, table)
    }

    pub fn resolve(&self, ty: &Ty, span: Span) -> Result<Ty, TypeError> {
        match ty {
            Ty::Named(n) => match self.aliases.get(n) {
                Some(t) => Ok(t.clone()),
                None => err(TypeErrorKind::UnknownType(n.clone()), span),
            },
            t => Ok(t.clone()),
        }
    }

    pub fn var_type(&self, name: &str) -> Option<&Ty> {
        self.ctx.lookup(name).or_else(|| self.globals.get(name))
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.globals.contains_key(name) && self.ctx.lookup(name).is_none()
    }

    pub fn table(&self) -> &OpTable {
        &self.table
    }

    pub fn op_decl(&self, name: &str) -> Option<&OpDecl> {
        self.ops.get(name)
    }

    /// Argument index and Lipschitz bound of a sensitivity-annotated operation.
    pub fn sensitivity(&self, op: &str) -> Option<(usize, Rational)> {
        let d = self.ops.get(op)?;
        let (arg, k) = d.sensitivity.as_ref()?;
        let i = d.args.iter().position(|t| matches!(t, Ty::Named(n) if n == arg))?;
        Some((i, k.clone()))
    }

    fn expect_assignable(&self, to: &Ty, from: &Ty, context: &str, span: Span) -> Result<(), TypeError> {
        if assignable(to, from) {
            Ok(())
        } else {
            err(TypeErrorKind::Mismatch { context: context.to_string(), expected: to.to_string(), found: from.clone() }, span)
        }
    }

    /// Type of an expression; `relational` admits side tags.
    pub fn infer(&self, e: &Expr, relational: bool) -> Result<Ty, TypeError> {
        match e {
            Expr::Var { name, side, span } => {
                if side.is_some() && !relational {
                    return err(TypeErrorKind::SideTagInProgram(name.clone()), *span);
                }
                match self.var_type(name) {
                    Some(t) => Ok(t.clone()),
                    None => err(TypeErrorKind::UnboundVariable(name.clone()), *span),
                }
            }
            Expr::Lit(Lit::Bool(_)) => Ok(Ty::Bool),
            Expr::Lit(Lit::Int(_)) => Ok(Ty::Int),
            Expr::Lit(Lit::Real(_)) => Ok(Ty::Real),
            Expr::Vector(es) => {
                for x in es {
                    let t = self.infer(x, relational)?;
                    self.expect_assignable(&Ty::Real, &t, "vector element", x.span())?;
                }
                Ok(Ty::Vec(es.len()))
            }
            Expr::Op { op, args, span } => {
                let tys: Vec<Ty> = args.iter().map(|a| self.infer(a, relational)).collect::<Result<_, _>>()?;
                self.op_type(op, &tys, *span, relational)
            }
        }
    }

    fn op_type(&self, op: &str, tys: &[Ty], span: Span, relational: bool) -> Result<Ty, TypeError> {
        let arity = |n: usize| -> Result<(), TypeError> {
            if tys.len() != n {
                return err(TypeErrorKind::Arity { op: op.to_string(), expected: n, found: tys.len() }, span);
            }
            Ok(())
        };
        let numeric = |t: &Ty| -> Result<(), TypeError> {
            if is_numeric(t) {
                Ok(())
            } else {
                err(TypeErrorKind::Mismatch { context: op.to_string(), expected: "int or real".into(), found: t.clone() }, span)
            }
        };
        let boolean = |t: &Ty| -> Result<(), TypeError> {
            if *t == Ty::Bool {
                Ok(())
            } else {
                err(TypeErrorKind::Mismatch { context: op.to_string(), expected: "bool".into(), found: t.clone() }, span)
            }
        };
        match op {
            "+" | "-" | "*" | "min" | "max" => {
                arity(2)?;
                numeric(&tys[0])?;
                numeric(&tys[1])?;
                Ok(if tys[0] == Ty::Int && tys[1] == Ty::Int { Ty::Int } else { Ty::Real })
            }
            "/" => {
                arity(2)?;
                numeric(&tys[0])?;
                numeric(&tys[1])?;
                Ok(Ty::Real)
            }
            "%" => {
                arity(2)?;
                for t in tys {
                    if *t != Ty::Int {
                        return err(TypeErrorKind::Mismatch { context: "%".into(), expected: "int".into(), found: t.clone() }, span);
                    }
                }
                Ok(Ty::Int)
            }
            "neg" | "abs" => {
                arity(1)?;
                numeric(&tys[0])?;
                Ok(tys[0].clone())
            }
            "<" | "<=" | ">" | ">=" => {
                arity(2)?;
                numeric(&tys[0])?;
                numeric(&tys[1])?;
                Ok(Ty::Bool)
            }
            "=" | "!=" => {
                arity(2)?;
                if tys[0] == tys[1] || (is_numeric(&tys[0]) && is_numeric(&tys[1])) {
                    Ok(Ty::Bool)
                } else {
                    err(TypeErrorKind::Mismatch { context: op.to_string(), expected: tys[0].to_string(), found: tys[1].clone() }, span)
                }
            }
            "&&" | "||" => {
                arity(2)?;
                boolean(&tys[0])?;
                boolean(&tys[1])?;
                Ok(Ty::Bool)
            }
            "=>" if relational => {
                arity(2)?;
                boolean(&tys[0])?;
                boolean(&tys[1])?;
                Ok(Ty::Bool)
            }
            "!" => {
                arity(1)?;
                boolean(&tys[0])?;
                Ok(Ty::Bool)
            }
            _ => {
                let Some(d) = self.ops.get(op) else {
                    return err(TypeErrorKind::UnknownOperation(op.to_string()), span);
                };
                arity(d.args.len())?;
                for (want, got) in d.args.iter().zip(tys) {
                    let want = self.resolve(want, span)?;
                    self.expect_assignable(&want, got, op, span)?;
                }
                self.resolve(&d.ret, span)
            }
        }
    }

    pub fn check_cmd(&self, c: &Cmd) -> Result<(), TypeError> {
        match c {
            Cmd::Skip | Cmd::Null => Ok(()),
            Cmd::Assign { var, expr, span } => {
                let Some(vt) = self.ctx.lookup(var) else {
                    return err(TypeErrorKind::UnboundVariable(var.clone()), *span);
                };
                let et = self.infer(expr, false)?;
                self.expect_assignable(vt, &et, &format!("assignment to `{var}`"), *span)
            }
            Cmd::Sample { var, dist, span } => {
                let Some(vt) = self.ctx.lookup(var) else {
                    return err(TypeErrorKind::UnboundVariable(var.clone()), *span);
                };
                let Some(sig) = self.table.dist(&dist.name) else {
                    return err(TypeErrorKind::UnknownOperation(dist.name.clone()), dist.span);
                };
                for (group, want) in [(&dist.params, &sig.params), (&dist.args, &sig.args)] {
                    if group.len() != want.len() {
                        return err(
                            TypeErrorKind::Arity { op: dist.name.clone(), expected: want.len(), found: group.len() },
                            dist.span,
                        );
                    }
                    for (e, w) in group.iter().zip(want) {
                        let t = self.infer(e, false)?;
                        self.expect_assignable(w, &t, &dist.name, dist.span)?;
                    }
                }
                self.expect_assignable(vt, &sig.ret, &format!("sampling into `{var}`"), *span)
            }
            Cmd::Seq(a, b) => {
                self.check_cmd(a)?;
                self.check_cmd(b)
            }
            Cmd::If { cond, then_branch, else_branch, span } => {
                self.check_guard(cond, *span)?;
                self.check_cmd(then_branch)?;
                self.check_cmd(else_branch)
            }
            Cmd::While { cond, body, span } => {
                self.check_guard(cond, *span)?;
                self.check_cmd(body)
            }
        }
    }

    fn check_guard(&self, cond: &Expr, span: Span) -> Result<(), TypeError> {
        let t = self.infer(cond, false)?;
        if t != Ty::Bool {
            return err(TypeErrorKind::GuardNotBool(t), span);
        }
        Ok(())
    }

    /// The all-zero memory of the context.
    pub fn default_memory(&self) -> Memory {
        Memory::from_pairs(self.ctx.iter().map(|(n, t)| {
            let t = match t {
                Ty::Named(a) => self.aliases.get(a).unwrap_or(t),
                t => t,
            };
            (n.clone(), default_value(t))
        }))
    }
}

pub fn is_numeric(t: &Ty) -> bool {
    matches!(t, Ty::Int | Ty::Real)
}

/// `from` may be stored in a slot of type `to` (ints promote to reals).
pub fn assignable(to: &Ty, from: &Ty) -> bool {
    to == from || (*to == Ty::Real && *from == Ty::Int)
}

pub fn default_value(t: &Ty) -> Value {
    match t {
        Ty::Bool => Value::Bool(false),
        Ty::Int => Value::int(0),
        Ty::Real | Ty::Named(_) => Value::Real(Rational::from_integer(0.into())),
        Ty::Vec(n) => Value::Vector(vec![Value::Real(Rational::from_integer(0.into())); *n]),
    }
}

/// Coerces a value into a slot of the given resolved type.
pub fn coerce(t: &Ty, v: Value) -> Value {
    match (t, v) {
        (Ty::Real, Value::Int(n)) => Value::Real(Rational::from_integer(n)),
        (Ty::Vec(_), Value::Vector(vs)) => Value::Vector(vs.into_iter().map(|x| coerce(&Ty::Real, x)).collect()),
        (_, v) => v,
    }
}

/// Whether the value inhabits the resolved type.
pub fn value_has_type(t: &Ty, v: &Value) -> bool {
    match (t, v) {
        (Ty::Bool, Value::Bool(_)) | (Ty::Int, Value::Int(_)) => true,
        (Ty::Real, Value::Real(_) | Value::Float(_)) => true,
        (Ty::Vec(n), Value::Vector(vs)) => vs.len() == *n && vs.iter().all(|x| value_has_type(&Ty::Real, x)),
        _ => false,
    }
}

/// Typechecks a whole program.
pub fn typecheck(p: &Program, table: &OpTable) -> Result<TypeEnv, TypeError> {
    let env = TypeEnv::for_program(p, table)?;
    env.check_cmd(&p.body)?;
    Ok(env)
}

/// Evaluates constants and parameters in declaration order, applying overrides to params.
pub fn eval_globals(p: &Program, overrides: &BTreeMap<String, Value>, table: &OpTable) -> Result<Memory, EvalError> {
    let mut g = Memory::new();
    for d in &p.prelude.globals {
        let v = match overrides.get(&d.name) {
            Some(v) if d.is_param => v.clone(),
            _ => eval_in(&d.value, &Memory::new(), &g, table)?,
        };
        let ty = resolve_plain(p, &d.ty);
        g.set(&d.name, coerce(&ty, v));
    }
    Ok(g)
}

fn resolve_plain(p: &Program, t: &Ty) -> Ty {
    match t {
        Ty::Named(n) => p.prelude.types.iter().find(|d| &d.name == n).map(|d| d.def.clone()).unwrap_or(Ty::Real),
        t => t.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse;

    fn check(src: &str) -> Result<TypeEnv, TypeError> {
        let table = OpTable::default();
        typecheck(&parse(src).unwrap(), &table)
    }

    #[test]
    fn accepts_and_rejects() {
        assert!(check("var x:int; x <- 1").is_ok());
        let e = check("var x:int; if x then { skip } else { skip }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::GuardNotBool(Ty::Int));
        assert!(check("var x:real; x <$ lap(1.0)(x)").is_ok());
        assert!(check("var x:int; y <- 1").is_err());
        assert!(check("var x:int; x <- 1.5").is_err());
        assert!(check("var x:real; x <- 1").is_ok());
        assert!(check("var b:bool; b <$ bern(0.5)").is_err());
        assert!(check("var b:int; b <$ lap(1)(0)").is_err());
    }

    #[test]
    fn prelude_and_sensitivity() {
        let src = "type data = vec_real(3); type queries = int; const Q: queries = 3;\n\
                   op eval(queries, int, data) -> real sensitivity(data, 1);\n\
                   var d: data; var s: real; s <- eval(Q, 1, d)";
        let env = check(src).unwrap();
        assert_eq!(env.sensitivity("eval"), Some((2, Rational::from_integer(1.into()))));
        assert_eq!(env.var_type("d"), Some(&Ty::Vec(3)));
        assert!(check("op eval(int, int, real) -> real sensitivity(data, 1); var s: real; skip").is_err());
    }

    #[test]
    fn deterministic_errors() {
        let src = "var x:int;\nx <- 1;\nx <- true";
        let a = check(src).unwrap_err();
        let b = check(src).unwrap_err();
        assert_eq!((a.span.line, a.span.col), (b.span.line, b.span.col));
        assert_eq!(a.span.line, 3);
    }
}
