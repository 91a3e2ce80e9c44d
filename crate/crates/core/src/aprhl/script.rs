//! The `.aprhl` proof-script format.
//!
//! ```text
//! aprhl 1
//! program "abovet.pwhile"
//! param eps = 1
//! let n = Q + 1
//! def step(i) { assn(cmd: "j <- j + ${i}", post: "true") }
//! goal(pre: "adj(d, 1)", post: "r<1> = r<2>", grade: (exp(eps), 0))
//! proof seq { use step(1) for k in 1 ..= 3 { skip(pre: "true") } }
//! ```
//!
//! A node is `rule(key: value, ...) { children }`. Values are numbers,
//! `exp(..)` terms, strings, booleans and tuples; strings interpolate
//! `${expr}`. `for`, `if`/`else`, `let` and `use` expand while the tree is
//! built, so the checker only ever sees concrete nodes.

use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::params::{Params, SValue};
use crate::num::{ExpNum, Rational};
use crate::syntax::lexer::{Cursor, Tok};
use crate::syntax::{Span, SyntaxError};

pub const SCRIPT_VERSION: u32 = 1;
const MAX_DEPTH: usize = 64;
const MAX_NODES: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Num(Rational),
    Str(String, Span),
    Bool(bool),
    Var(String, Span),
    Tuple(Vec<SExpr>),
    Unary(String, Box<SExpr>, Span),
    Binary(String, Box<SExpr>, Box<SExpr>, Span),
    Call(String, Vec<SExpr>, Span),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeAst {
    Rule { rule: String, fields: Vec<(String, SExpr)>, children: Vec<NodeAst>, span: Span },
    Use { name: String, args: Vec<SExpr>, span: Span },
    For { var: String, lo: SExpr, hi: SExpr, body: Vec<NodeAst>, span: Span },
    If { cond: SExpr, then_nodes: Vec<NodeAst>, else_nodes: Vec<NodeAst>, span: Span },
    Let { name: String, value: SExpr, span: Span },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Def {
    pub params: Vec<String>,
    pub body: Vec<NodeAst>,
}

/// A parsed record file: header, declarations and top-level records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScriptAst {
    pub kind: String,
    pub version: u32,
    pub program: Option<(String, Span)>,
    pub params: Vec<(String, SExpr, Span)>,
    pub lets: Vec<(String, SExpr, Span)>,
    pub defs: BTreeMap<String, Def>,
    /// `goal(...)`, `audit(...)` and other top-level records, in order.
    pub records: Vec<NodeAst>,
    pub proof: Option<NodeAst>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("at {span}: {message}")]
    Eval { span: Span, message: String },
}

fn eval_err(span: Span, message: impl Into<String>) -> ScriptError {
    ScriptError::Eval { span, message: message.into() }
}

/// An expanded proof node.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub rule: String,
    pub params: Params,
    pub children: Vec<Node>,
    pub span: Span,
}

impl Node {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }
}

// ---------------------------------------------------------------- parsing

/// Parses a record file whose header keyword is `kind` (`aprhl`, `audit`, ...).
pub fn parse_records(src: &str, kind: &str) -> Result<ScriptAst, ScriptError> {
    let mut cur = Cursor::new(src)?;
    let mut ast = ScriptAst { kind: kind.to_string(), ..Default::default() };
    cur.expect_keyword(kind)?;
    let span = cur.span();
    match cur.next().tok {
        Tok::Int(n) => {
            let v = n.to_u32().ok_or_else(|| SyntaxError::new(span, "bad version"))?;
            if v != SCRIPT_VERSION {
                return Err(SyntaxError::new(span, format!("unsupported {kind} version {v}; expected {SCRIPT_VERSION}")).into());
            }
            ast.version = v;
        }
        other => return Err(SyntaxError::new(span, format!("expected a version number, found {other}")).into()),
    }
    while !cur.at_eof() {
        let span = cur.span();
        if cur.eat_ident("program") {
            let (path, _) = cur.string()?;
            if ast.program.is_some() {
                return Err(SyntaxError::new(span, "duplicate `program`").into());
            }
            ast.program = Some((path, span));
        } else if cur.eat_ident("param") {
            let (name, _) = cur.ident()?;
            cur.expect(&Tok::Eq)?;
            ast.params.push((name, parse_sexpr(&mut cur)?, span));
        } else if cur.eat_ident("let") {
            let (name, _) = cur.ident()?;
            cur.expect(&Tok::Eq)?;
            ast.lets.push((name, parse_sexpr(&mut cur)?, span));
        } else if cur.eat_ident("def") {
            let (name, _) = cur.ident()?;
            cur.expect(&Tok::LParen)?;
            let mut params = Vec::new();
            while !cur.at(&Tok::RParen) {
                params.push(cur.ident()?.0);
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.expect(&Tok::RParen)?;
            let body = parse_block(&mut cur, 0)?;
            if ast.defs.insert(name.clone(), Def { params, body }).is_some() {
                return Err(SyntaxError::new(span, format!("template `{name}` defined twice")).into());
            }
        } else if cur.eat_ident("proof") {
            if ast.proof.is_some() {
                return Err(SyntaxError::new(span, "duplicate `proof`").into());
            }
            ast.proof = Some(parse_node(&mut cur, 0)?);
        } else {
            ast.records.push(parse_node(&mut cur, 0)?);
        }
        cur.eat(&Tok::Semi);
    }
    Ok(ast)
}

pub fn parse_script(src: &str) -> Result<ScriptAst, ScriptError> {
    parse_records(src, "aprhl")
}

fn parse_block(cur: &mut Cursor, depth: usize) -> Result<Vec<NodeAst>, SyntaxError> {
    if depth > MAX_DEPTH {
        return Err(cur.error("blocks nested too deeply"));
    }
    cur.expect(&Tok::LBrace)?;
    let mut out = Vec::new();
    while !cur.at(&Tok::RBrace) {
        if cur.at_eof() {
            return Err(cur.error("unclosed `{`"));
        }
        out.push(parse_node(cur, depth + 1)?);
        cur.eat(&Tok::Semi);
        cur.eat(&Tok::Comma);
    }
    cur.expect(&Tok::RBrace)?;
    Ok(out)
}

fn parse_node(cur: &mut Cursor, depth: usize) -> Result<NodeAst, SyntaxError> {
    let span = cur.span();
    if cur.eat_ident("use") {
        let (name, _) = cur.ident()?;
        let args = if cur.at(&Tok::LParen) { parse_args(cur)? } else { Vec::new() };
        return Ok(NodeAst::Use { name, args, span });
    }
    if cur.eat_ident("for") {
        let (var, _) = cur.ident()?;
        cur.expect_keyword("in")?;
        let lo = parse_sexpr(cur)?;
        cur.expect(&Tok::DotDotEq)?;
        let hi = parse_sexpr(cur)?;
        let body = parse_block(cur, depth + 1)?;
        return Ok(NodeAst::For { var, lo, hi, body, span });
    }
    if cur.eat_ident("if") {
        let cond = parse_sexpr(cur)?;
        let then_nodes = parse_block(cur, depth + 1)?;
        let else_nodes = if cur.eat_ident("else") {
            if cur.at_ident("if") {
                vec![parse_node(cur, depth + 1)?]
            } else {
                parse_block(cur, depth + 1)?
            }
        } else {
            Vec::new()
        };
        return Ok(NodeAst::If { cond, then_nodes, else_nodes, span });
    }
    if cur.eat_ident("let") {
        let (name, _) = cur.ident()?;
        cur.expect(&Tok::Eq)?;
        let value = parse_sexpr(cur)?;
        return Ok(NodeAst::Let { name, value, span });
    }
    let (rule, _) = cur.ident()?;
    let mut fields = Vec::new();
    if cur.eat(&Tok::LParen) {
        while !cur.at(&Tok::RParen) {
            let (key, kspan) = cur.ident()?;
            cur.expect(&Tok::Colon)?;
            if fields.iter().any(|(k, _)| *k == key) {
                return Err(SyntaxError::new(kspan, format!("duplicate field `{key}`")));
            }
            fields.push((key, parse_sexpr(cur)?));
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    let children = if cur.at(&Tok::LBrace) { parse_block(cur, depth + 1)? } else { Vec::new() };
    Ok(NodeAst::Rule { rule, fields, children, span })
}

fn parse_args(cur: &mut Cursor) -> Result<Vec<SExpr>, SyntaxError> {
    cur.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    while !cur.at(&Tok::RParen) {
        args.push(parse_sexpr(cur)?);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(&Tok::RParen)?;
    Ok(args)
}

pub fn parse_sexpr(cur: &mut Cursor) -> Result<SExpr, SyntaxError> {
    parse_level(cur, 0, 0)
}

fn binop(t: &Tok) -> Option<(&'static str, u8)> {
    Some(match t {
        Tok::Or => ("||", 0),
        Tok::And => ("&&", 1),
        Tok::Eq => ("=", 2),
        Tok::Ne => ("!=", 2),
        Tok::Lt => ("<", 2),
        Tok::Le => ("<=", 2),
        Tok::Gt => (">", 2),
        Tok::Ge => (">=", 2),
        Tok::Plus => ("+", 3),
        Tok::Minus => ("-", 3),
        Tok::Star => ("*", 4),
        Tok::Slash => ("/", 4),
        Tok::Percent => ("%", 4),
        _ => return None,
    })
}

fn parse_level(cur: &mut Cursor, min: u8, depth: usize) -> Result<SExpr, SyntaxError> {
    if depth > MAX_DEPTH {
        return Err(cur.error("expression nested too deeply"));
    }
    let mut lhs = parse_unary(cur, depth)?;
    while let Some((op, p)) = binop(cur.peek()) {
        if p < min {
            break;
        }
        let span = cur.next().span;
        // comparisons do not chain
        let next_min = if p == 2 { 3 } else { p + 1 };
        let rhs = parse_level(cur, next_min, depth + 1)?;
        lhs = SExpr::Binary(op.to_string(), Box::new(lhs), Box::new(rhs), span);
    }
    Ok(lhs)
}

fn parse_unary(cur: &mut Cursor, depth: usize) -> Result<SExpr, SyntaxError> {
    let span = cur.span();
    if cur.eat(&Tok::Minus) {
        return Ok(SExpr::Unary("-".into(), Box::new(parse_level(cur, 5, depth + 1)?), span));
    }
    if cur.eat(&Tok::Not) {
        return Ok(SExpr::Unary("!".into(), Box::new(parse_level(cur, 2, depth + 1)?), span));
    }
    parse_atom(cur, depth)
}

fn parse_atom(cur: &mut Cursor, depth: usize) -> Result<SExpr, SyntaxError> {
    let tok = cur.next();
    let span = tok.span;
    match tok.tok {
        Tok::Int(n) => Ok(SExpr::Num(Rational::from_integer(n))),
        Tok::Dec(q, _) => Ok(SExpr::Num(q)),
        Tok::Str(s) => Ok(SExpr::Str(s, span)),
        Tok::Ident(w) if w == "true" => Ok(SExpr::Bool(true)),
        Tok::Ident(w) if w == "false" => Ok(SExpr::Bool(false)),
        Tok::Ident(w) => {
            if cur.at(&Tok::LParen) {
                let mut args = Vec::new();
                cur.next();
                while !cur.at(&Tok::RParen) {
                    args.push(parse_level(cur, 0, depth + 1)?);
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
                cur.expect(&Tok::RParen)?;
                Ok(SExpr::Call(w, args, span))
            } else {
                Ok(SExpr::Var(w, span))
            }
        }
        Tok::LParen => {
            let first = parse_level(cur, 0, depth + 1)?;
            if cur.eat(&Tok::RParen) {
                return Ok(first);
            }
            let mut items = vec![first];
            while cur.eat(&Tok::Comma) {
                if cur.at(&Tok::RParen) {
                    break;
                }
                items.push(parse_level(cur, 0, depth + 1)?);
            }
            cur.expect(&Tok::RParen)?;
            Ok(SExpr::Tuple(items))
        }
        other => Err(SyntaxError::new(span, format!("expected a value, found {other}"))),
    }
}

// ------------------------------------------------------------- evaluation

pub type Env = BTreeMap<String, SValue>;

fn num(v: &SValue, span: Span) -> Result<Rational, ScriptError> {
    match v {
        SValue::Num(q) => Ok(q.clone()),
        SValue::Exp(e) => e.as_rational().ok_or_else(|| eval_err(span, format!("`{e}` is not a rational number"))),
        other => Err(eval_err(span, format!("expected a number, found a {}", other.type_name()))),
    }
}

fn boolean(v: &SValue, span: Span) -> Result<bool, ScriptError> {
    match v {
        SValue::Bool(b) => Ok(*b),
        other => Err(eval_err(span, format!("expected a bool, found a {}", other.type_name()))),
    }
}

/// Integers within `i64`, for loop bounds.
fn small_int(v: &SValue, span: Span) -> Result<i64, ScriptError> {
    let q = num(v, span)?;
    if !q.is_integer() {
        return Err(eval_err(span, "expected an integer"));
    }
    q.to_integer().to_i64().ok_or_else(|| eval_err(span, "integer out of range"))
}

fn normalize(e: ExpNum) -> SValue {
    match e.as_rational() {
        Some(q) => SValue::Num(q),
        None => SValue::Exp(e),
    }
}

pub fn eval_sexpr(e: &SExpr, env: &Env) -> Result<SValue, ScriptError> {
    match e {
        SExpr::Num(q) => Ok(SValue::Num(q.clone())),
        SExpr::Bool(b) => Ok(SValue::Bool(*b)),
        SExpr::Str(s, span) => Ok(SValue::Str(interpolate(s, env, *span)?)),
        SExpr::Var(n, span) => env.get(n).cloned().ok_or_else(|| eval_err(*span, format!("unbound name `{n}`"))),
        SExpr::Tuple(xs) => Ok(SValue::Tuple(xs.iter().map(|x| eval_sexpr(x, env)).collect::<Result<_, _>>()?)),
        SExpr::Unary(op, x, span) => {
            let v = eval_sexpr(x, env)?;
            match op.as_str() {
                "!" => Ok(SValue::Bool(!boolean(&v, *span)?)),
                _ => match v {
                    SValue::Exp(e) => Ok(normalize(-&e)),
                    v => Ok(SValue::Num(-num(&v, *span)?)),
                },
            }
        }
        SExpr::Binary(op, a, b, span) => {
            let span = *span;
            if op == "&&" || op == "||" {
                let l = boolean(&eval_sexpr(a, env)?, span)?;
                if (op == "&&") != l {
                    return Ok(SValue::Bool(l));
                }
                return Ok(SValue::Bool(boolean(&eval_sexpr(b, env)?, span)?));
            }
            let (x, y) = (eval_sexpr(a, env)?, eval_sexpr(b, env)?);
            binary(op, &x, &y, span)
        }
        SExpr::Call(f, args, span) => {
            let vals = args.iter().map(|x| eval_sexpr(x, env)).collect::<Result<Vec<_>, _>>()?;
            call(f, &vals, *span)
        }
    }
}

fn binary(op: &str, x: &SValue, y: &SValue, span: Span) -> Result<SValue, ScriptError> {
    if op == "=" || op == "!=" {
        let eq = match (x.as_exp(), y.as_exp()) {
            (Some(a), Some(b)) => a == b,
            _ => x == y,
        };
        return Ok(SValue::Bool(eq == (op == "=")));
    }
    if let (SValue::Str(a), SValue::Str(b), "+") = (x, y, op) {
        return Ok(SValue::Str(format!("{a}{b}")));
    }
    let exact = matches!(x, SValue::Exp(_)) || matches!(y, SValue::Exp(_));
    if exact && ["+", "-", "*", "<", "<=", ">", ">="].contains(&op) {
        let bad = |v: &SValue| eval_err(span, format!("expected a number, found a {}", v.type_name()));
        let a = x.as_exp().ok_or_else(|| bad(x))?;
        let b = y.as_exp().ok_or_else(|| bad(y))?;
        return Ok(match op {
            "+" => normalize(&a + &b),
            "-" => normalize(&a - &b),
            "*" => normalize(&a * &b),
            "<" => SValue::Bool(a < b),
            "<=" => SValue::Bool(a <= b),
            ">" => SValue::Bool(a > b),
            _ => SValue::Bool(a >= b),
        });
    }
    let (a, b) = (num(x, span)?, num(y, span)?);
    Ok(match op {
        "+" => SValue::Num(a + b),
        "-" => SValue::Num(a - b),
        "*" => SValue::Num(a * b),
        "/" | "%" => {
            if b.is_zero() {
                return Err(eval_err(span, "division by zero"));
            }
            if op == "/" {
                SValue::Num(a / b)
            } else {
                if !a.is_integer() || !b.is_integer() {
                    return Err(eval_err(span, "`%` needs integers"));
                }
                SValue::Num(Rational::from_integer(a.to_integer() % b.to_integer()))
            }
        }
        "<" => SValue::Bool(a < b),
        "<=" => SValue::Bool(a <= b),
        ">" => SValue::Bool(a > b),
        ">=" => SValue::Bool(a >= b),
        _ => return Err(eval_err(span, format!("unknown operator `{op}`"))),
    })
}

fn call(f: &str, args: &[SValue], span: Span) -> Result<SValue, ScriptError> {
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(eval_err(span, format!("`{f}` takes {n} argument(s), found {}", args.len())))
        }
    };
    match f {
        "exp" => {
            want(1)?;
            let x = num(&args[0], span)?;
            if x.abs() > Rational::from_integer(10_000.into()) {
                return Err(eval_err(span, "exponent out of range"));
            }
            Ok(normalize(ExpNum::exp(x)))
        }
        "min" | "max" => {
            if args.is_empty() {
                return Err(eval_err(span, format!("`{f}` needs arguments")));
            }
            let mut best = args[0].as_exp().ok_or_else(|| eval_err(span, "expected numbers"))?;
            for a in &args[1..] {
                let v = a.as_exp().ok_or_else(|| eval_err(span, "expected numbers"))?;
                best = if f == "min" { best.min(v) } else { best.max(v) };
            }
            Ok(normalize(best))
        }
        "abs" => {
            want(1)?;
            Ok(SValue::Num(num(&args[0], span)?.abs()))
        }
        "floor" => {
            want(1)?;
            Ok(SValue::Num(num(&args[0], span)?.floor()))
        }
        // per-iteration grade shorthand of [while]
        "uniform" => {
            want(2)?;
            Ok(SValue::Tuple(vec![SValue::Str("uniform".into()), SValue::Tuple(args.to_vec())]))
        }
        "select" => {
            want(3)?;
            Ok(if boolean(&args[0], span)? { args[1].clone() } else { args[2].clone() })
        }
        "replace" => {
            want(3)?;
            match args {
                [SValue::Str(s), SValue::Str(from), SValue::Str(to)] if !from.is_empty() => {
                    Ok(SValue::Str(s.replace(from.as_str(), to)))
                }
                _ => Err(eval_err(span, "`replace` takes three strings, the second non-empty")),
            }
        }
        "str" => {
            want(1)?;
            Ok(SValue::Str(args[0].to_string()))
        }
        _ => Err(eval_err(span, format!("unknown function `{f}`"))),
    }
}

/// Replaces every `${expr}` with the rendering of its value.
pub fn interpolate(s: &str, env: &Env, span: Span) -> Result<String, ScriptError> {
    let mut out = String::new();
    let mut rest = s;
    while let Some(i) = rest.find("${") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        let j = after.find('}').ok_or_else(|| eval_err(span, "unclosed `${` in string"))?;
        let src = &after[..j];
        let mut cur = Cursor::new(src).map_err(|e| eval_err(span, format!("in `${{{src}}}`: {}", e.message)))?;
        let e = parse_sexpr(&mut cur).map_err(|e| eval_err(span, format!("in `${{{src}}}`: {}", e.message)))?;
        if !cur.at_eof() {
            return Err(eval_err(span, format!("in `${{{src}}}`: trailing input")));
        }
        let v = eval_sexpr(&e, env)?;
        out.push_str(&v.to_string());
        rest = &after[j + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Expands templates, loops and conditionals into concrete nodes.
pub struct Expander<'a> {
    defs: &'a BTreeMap<String, Def>,
    nodes: usize,
}

impl<'a> Expander<'a> {
    pub fn new(defs: &'a BTreeMap<String, Def>) -> Self {
        Expander { defs, nodes: 0 }
    }

    pub fn expand(&mut self, n: &NodeAst, env: &Env) -> Result<Vec<Node>, ScriptError> {
        let mut env = env.clone();
        self.expand_list(std::slice::from_ref(n), &mut env, 0)
    }

    fn expand_list(&mut self, ns: &[NodeAst], env: &mut Env, depth: usize) -> Result<Vec<Node>, ScriptError> {
        let mut out = Vec::new();
        for n in ns {
            self.expand_one(n, env, depth, &mut out)?;
        }
        Ok(out)
    }

    fn expand_one(&mut self, n: &NodeAst, env: &mut Env, depth: usize, out: &mut Vec<Node>) -> Result<(), ScriptError> {
        if depth > MAX_DEPTH {
            return Err(eval_err(span_of(n), "templates nested too deeply"));
        }
        match n {
            NodeAst::Let { name, value, .. } => {
                let v = eval_sexpr(value, env)?;
                env.insert(name.clone(), v);
            }
            NodeAst::Rule { rule, fields, children, span } => {
                self.nodes += 1;
                if self.nodes > MAX_NODES {
                    return Err(eval_err(*span, "proof tree too large"));
                }
                let mut params = BTreeMap::new();
                for (k, e) in fields {
                    params.insert(k.clone(), eval_sexpr(e, env)?);
                }
                let mut inner = env.clone();
                let children = self.expand_list(children, &mut inner, depth + 1)?;
                out.push(Node { rule: rule.clone(), params: Params(params), children, span: *span });
            }
            NodeAst::Use { name, args, span } => {
                let def = self.defs.get(name).ok_or_else(|| eval_err(*span, format!("unknown template `{name}`")))?;
                if def.params.len() != args.len() {
                    return Err(eval_err(*span, format!("`{name}` takes {} argument(s), found {}", def.params.len(), args.len())));
                }
                let mut inner = env.clone();
                for (p, a) in def.params.iter().zip(args) {
                    let v = eval_sexpr(a, env)?;
                    inner.insert(p.clone(), v);
                }
                out.extend(self.expand_list(&def.body, &mut inner, depth + 1)?);
            }
            NodeAst::For { var, lo, hi, body, span } => {
                let lo = small_int(&eval_sexpr(lo, env)?, *span)?;
                let hi = small_int(&eval_sexpr(hi, env)?, *span)?;
                if hi.saturating_sub(lo) > MAX_NODES as i64 {
                    return Err(eval_err(*span, "loop range too large"));
                }
                for i in lo..=hi {
                    let mut inner = env.clone();
                    inner.insert(var.clone(), SValue::Num(Rational::from_integer(i.into())));
                    out.extend(self.expand_list(body, &mut inner, depth + 1)?);
                }
            }
            NodeAst::If { cond, then_nodes, else_nodes, span } => {
                let b = boolean(&eval_sexpr(cond, env)?, *span)?;
                let mut inner = env.clone();
                out.extend(self.expand_list(if b { then_nodes } else { else_nodes }, &mut inner, depth + 1)?);
            }
        }
        Ok(())
    }
}

fn span_of(n: &NodeAst) -> Span {
    match n {
        NodeAst::Rule { span, .. }
        | NodeAst::Use { span, .. }
        | NodeAst::For { span, .. }
        | NodeAst::If { span, .. }
        | NodeAst::Let { span, .. } => *span,
    }
}

/// Evaluates the `param` declarations, with `overrides` taking precedence.
pub fn eval_params(ast: &ScriptAst, overrides: &BTreeMap<String, SValue>) -> Result<Env, ScriptError> {
    let mut env = Env::new();
    for (name, e, _) in &ast.params {
        let v = match overrides.get(name) {
            Some(v) => v.clone(),
            None => eval_sexpr(e, &env)?,
        };
        env.insert(name.clone(), v);
    }
    if let Some(unknown) = overrides.keys().find(|k| !ast.params.iter().any(|(n, _, _)| n == *k)) {
        return Err(eval_err(Span::default(), format!("no script parameter named `{unknown}`")));
    }
    Ok(env)
}

pub fn eval_lets(ast: &ScriptAst, env: &mut Env) -> Result<(), ScriptError> {
    for (name, e, _) in &ast.lets {
        let v = eval_sexpr(e, env)?;
        env.insert(name.clone(), v);
    }
    Ok(())
}

/// Evaluates the fields of a top-level record.
pub fn record_fields(n: &NodeAst, env: &Env) -> Result<(String, Params, Span), ScriptError> {
    match n {
        NodeAst::Rule { rule, fields, children, span } => {
            if !children.is_empty() {
                return Err(eval_err(*span, format!("record `{rule}` takes no block")));
            }
            let mut params = BTreeMap::new();
            for (k, e) in fields {
                params.insert(k.clone(), eval_sexpr(e, env)?);
            }
            Ok((rule.clone(), Params(params), *span))
        }
        other => Err(eval_err(span_of(other), "expected a record")),
    }
}

/// `1` → `Num(1)`; used to bind numeric globals.
pub fn int_value(n: i64) -> SValue {
    SValue::Num(Rational::from_integer(n.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::ratio;

    const SRC: &str = r#"
aprhl 1
program "p.pwhile"
param eps = 1
let half = eps / 2
def leaf(i) { assn(cmd: "x <- ${i}", post: "true") }
goal(pre: "true", post: "true", grade: (exp(half) * exp(half), 0))
proof seq {
  for k in 1 ..= 3 {
    if k % 2 = 1 { use leaf(k) } else { skip(pre: "x<1> = ${k}") }
  }
}
"#;

    #[test]
    fn parses_and_expands() {
        let ast = parse_script(SRC).unwrap();
        assert_eq!(ast.program.as_ref().unwrap().0, "p.pwhile");
        let mut env = eval_params(&ast, &BTreeMap::new()).unwrap();
        eval_lets(&ast, &mut env).unwrap();
        let (name, goal, _) = record_fields(&ast.records[0], &env).unwrap();
        assert_eq!(name, "goal");
        let g = goal.grade("grade").unwrap().unwrap();
        assert_eq!(g.gamma(), &ExpNum::exp(ratio(1, 1)));

        let root = Expander::new(&ast.defs).expand(ast.proof.as_ref().unwrap(), &env).unwrap();
        let root = &root[0];
        assert_eq!(root.children.len(), 3);
        assert_eq!(root.children[0].params.string("cmd").unwrap().unwrap(), "x <- 1");
        assert_eq!(root.children[1].rule, "skip");
        assert_eq!(root.children[1].params.string("pre").unwrap().unwrap(), "x<1> = 2");
    }

    #[test]
    fn overrides_and_errors() {
        let ast = parse_script(SRC).unwrap();
        let o = BTreeMap::from([("eps".to_string(), SValue::Num(ratio(1, 2)))]);
        let env = eval_params(&ast, &o).unwrap();
        assert_eq!(env["eps"].to_string(), "0.5");
        let bad = BTreeMap::from([("delta".to_string(), SValue::Num(ratio(1, 2)))]);
        assert!(eval_params(&ast, &bad).is_err());

        assert!(parse_script("aprhl 2").is_err());
        assert!(parse_script("aprhl 1 proof seq {").is_err());
        assert!(parse_script("aprhl 1 proof skip(pre: \"true\", pre: \"x\")").is_err());
        let ast = parse_script("aprhl 1 def f() { use f() } proof seq { use f() }").unwrap();
        let err = Expander::new(&ast.defs).expand(ast.proof.as_ref().unwrap(), &Env::new()).unwrap_err();
        assert!(err.to_string().contains("too deeply"), "{err}");
    }
}
