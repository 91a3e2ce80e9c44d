//! Recursive-descent parser for `.pwhile` programs and the shared expression grammar.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::ast::*;
use super::lexer::{Cursor, Span, SyntaxError, Tok};
use super::ops::{OpTable, BUILTIN_OPS};
use crate::num::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown operation `{name}` at {span}")]
    UnknownOperation { name: String, span: Span },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax(e) => e.span,
            ParseError::UnknownOperation { span, .. } => *span,
        }
    }
}

const KEYWORDS: &[&str] = &[
    "if", "then", "else", "while", "do", "skip", "null", "var", "type", "const", "param", "op", "true", "false",
];

/// Parses a program with the default operation table.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    parse_with(text, &OpTable::default())
}

pub fn parse_with(text: &str, table: &OpTable) -> Result<Program, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut prelude = Prelude::default();
    let mut ctx = TypingContext::new();
    loop {
        if cur.eat_ident("type") {
            let (name, _) = cur.ident()?;
            cur.expect(&Tok::Eq)?;
            let def = parse_ty(&mut cur)?;
            cur.expect(&Tok::Semi)?;
            prelude.types.push(TypeDecl { name, def });
        } else if cur.at_ident("const") || cur.at_ident("param") {
            let is_param = cur.at_ident("param");
            cur.next();
            let (name, _) = cur.ident()?;
            cur.expect(&Tok::Colon)?;
            let ty = parse_ty(&mut cur)?;
            cur.expect(&Tok::Eq)?;
            let value = parse_expr(&mut cur, false)?;
            cur.expect(&Tok::Semi)?;
            prelude.globals.push(GlobalDecl { name, ty, value, is_param });
        } else if cur.eat_ident("op") {
            prelude.ops.push(parse_op_decl(&mut cur)?);
        } else if cur.at_ident("var") {
            let span = cur.next().span;
            loop {
                let (name, _) = cur.ident()?;
                cur.expect(&Tok::Colon)?;
                let ty = parse_ty(&mut cur)?;
                if !ctx.declare(&name, ty) {
                    return Err(SyntaxError::new(span, format!("variable `{name}` declared twice")).into());
                }
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.expect(&Tok::Semi)?;
        } else {
            break;
        }
    }
    let body = parse_stmts(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {}", cur.peek())).into());
    }
    let program = Program { prelude, ctx, body };
    check_known_ops(&program, table)?;
    Ok(program)
}

/// Parses a command alone (no declarations).
pub fn parse_cmd(text: &str) -> Result<Cmd, ParseError> {
    let mut cur = Cursor::new(text)?;
    let c = parse_stmts(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {}", cur.peek())).into());
    }
    Ok(c)
}

pub fn parse_ty(cur: &mut Cursor) -> Result<Ty, SyntaxError> {
    let (name, _) = cur.ident()?;
    Ok(match name.as_str() {
        "bool" => Ty::Bool,
        "int" => Ty::Int,
        "real" => Ty::Real,
        "vec_real" => {
            cur.expect(&Tok::LParen)?;
            let n = match cur.next().tok {
                Tok::Int(n) => n.to_usize().filter(|n| *n > 0).ok_or_else(|| cur.error("bad vector length"))?,
                other => return Err(cur.error(format!("expected vector length, found {other}"))),
            };
            cur.expect(&Tok::RParen)?;
            Ty::Vec(n)
        }
        _ => Ty::Named(name),
    })
}

fn parse_op_decl(cur: &mut Cursor) -> Result<OpDecl, SyntaxError> {
    let (name, _) = cur.ident()?;
    cur.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    if !cur.at(&Tok::RParen) {
        loop {
            args.push(parse_ty(cur)?);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
    }
    cur.expect(&Tok::RParen)?;
    cur.expect(&Tok::Arrow)?;
    let ret = parse_ty(cur)?;
    let mut sensitivity = None;
    if cur.eat_ident("sensitivity") {
        cur.expect(&Tok::LParen)?;
        let (arg, _) = cur.ident()?;
        cur.expect(&Tok::Comma)?;
        let k = parse_number(cur)?;
        cur.expect(&Tok::RParen)?;
        sensitivity = Some((arg, k));
    }
    cur.expect(&Tok::Semi)?;
    Ok(OpDecl { name, args, ret, sensitivity })
}

pub fn parse_number(cur: &mut Cursor) -> Result<Rational, SyntaxError> {
    let neg = cur.eat(&Tok::Minus);
    let q = match cur.next().tok {
        Tok::Int(n) => Rational::from_integer(n),
        Tok::Dec(q, _) => q,
        other => return Err(cur.error(format!("expected number, found {other}"))),
    };
    let q = if cur.eat(&Tok::Slash) {
        match cur.next().tok {
            Tok::Int(d) if d != 0.into() => q / Rational::from_integer(d),
            other => return Err(cur.error(format!("expected nonzero denominator, found {other}"))),
        }
    } else {
        q
    };
    Ok(if neg { -q } else { q })
}

fn ends_block(cur: &Cursor) -> bool {
    cur.at(&Tok::RBrace) || cur.at_eof()
}

fn parse_stmts(cur: &mut Cursor) -> Result<Cmd, SyntaxError> {
    let mut cmds = Vec::new();
    if ends_block(cur) {
        return Ok(Cmd::Skip);
    }
    loop {
        let (c, block_ended) = parse_stmt(cur)?;
        cmds.push(c);
        if cur.eat(&Tok::Semi) {
            if ends_block(cur) {
                break;
            }
            continue;
        }
        if ends_block(cur) {
            break;
        }
        if !block_ended {
            return Err(cur.error(format!("expected `;`, found {}", cur.peek())));
        }
    }
    Ok(Cmd::seq_all(cmds))
}

fn parse_block(cur: &mut Cursor) -> Result<Cmd, SyntaxError> {
    cur.expect(&Tok::LBrace)?;
    let c = cur.nested(parse_stmts)?;
    cur.expect(&Tok::RBrace)?;
    Ok(c)
}

/// Returns the command and whether it ended with a block.
fn parse_stmt(cur: &mut Cursor) -> Result<(Cmd, bool), SyntaxError> {
    let span = cur.span();
    if cur.eat_ident("skip") {
        return Ok((Cmd::Skip, false));
    }
    if cur.eat_ident("null") {
        return Ok((Cmd::Null, false));
    }
    if cur.eat_ident("if") {
        let cond = parse_expr(cur, false)?;
        cur.expect_keyword("then")?;
        let t = parse_block(cur)?;
        let e = if cur.eat_ident("else") {
            if cur.at_ident("if") {
                cur.nested(parse_stmt)?.0
            } else {
                parse_block(cur)?
            }
        } else {
            Cmd::Skip
        };
        return Ok((Cmd::If { cond, then_branch: Box::new(t), else_branch: Box::new(e), span }, true));
    }
    if cur.eat_ident("while") {
        let cond = parse_expr(cur, false)?;
        cur.expect_keyword("do")?;
        let body = parse_block(cur)?;
        return Ok((Cmd::While { cond, body: Box::new(body), span }, true));
    }
    if cur.at(&Tok::LBrace) {
        return Ok((parse_block(cur)?, true));
    }
    let (var, _) = cur.ident()?;
    if KEYWORDS.contains(&var.as_str()) {
        return Err(SyntaxError::new(span, format!("unexpected keyword `{var}`")));
    }
    if cur.eat(&Tok::Assign) {
        let expr = parse_expr(cur, false)?;
        Ok((Cmd::Assign { var, expr, span }, false))
    } else if cur.eat(&Tok::Sample) {
        let dist = parse_dist(cur)?;
        Ok((Cmd::Sample { var, dist, span }, false))
    } else {
        Err(cur.error(format!("expected `<-` or `<$`, found {}", cur.peek())))
    }
}

fn parse_dist(cur: &mut Cursor) -> Result<DistExpr, SyntaxError> {
    let (name, span) = cur.ident()?;
    let params = parse_args(cur)?;
    let args = if cur.at(&Tok::LParen) { parse_args(cur)? } else { Vec::new() };
    Ok(DistExpr { name, params, args, span })
}

fn parse_args(cur: &mut Cursor) -> Result<Vec<Expr>, SyntaxError> {
    cur.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    if !cur.at(&Tok::RParen) {
        loop {
            args.push(parse_expr(cur, false)?);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
    }
    cur.expect(&Tok::RParen)?;
    Ok(args)
}

/// Expression grammar. With `relational`, side tags and `=>` are accepted.
pub fn parse_expr(cur: &mut Cursor, relational: bool) -> Result<Expr, SyntaxError> {
    ExprParser { relational }.implies(cur)
}

struct ExprParser {
    relational: bool,
}

impl ExprParser {
    fn implies(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        cur.nested(|cur| self.implies_at(cur))
    }

    fn implies_at(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let lhs = self.or(cur)?;
        if self.relational && cur.at(&Tok::Implies) {
            let span = cur.next().span;
            let rhs = self.implies(cur)?;
            return Ok(Expr::Op { op: "=>".into(), args: vec![lhs, rhs], span });
        }
        Ok(lhs)
    }

    fn or(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let mut lhs = self.and(cur)?;
        while cur.at(&Tok::Or) {
            let span = cur.next().span;
            let rhs = self.and(cur)?;
            lhs = Expr::Op { op: "||".into(), args: vec![lhs, rhs], span };
        }
        Ok(lhs)
    }

    fn and(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let mut lhs = self.not(cur)?;
        while cur.at(&Tok::And) {
            let span = cur.next().span;
            let rhs = self.not(cur)?;
            lhs = Expr::Op { op: "&&".into(), args: vec![lhs, rhs], span };
        }
        Ok(lhs)
    }

    fn not(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        if cur.at(&Tok::Not) {
            let span = cur.next().span;
            let e = cur.nested(|cur| self.not(cur))?;
            return Ok(Expr::Op { op: "!".into(), args: vec![e], span });
        }
        self.cmp(cur)
    }

    fn cmp(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let lhs = self.add(cur)?;
        let op = match cur.peek() {
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            _ => return Ok(lhs),
        };
        let span = cur.next().span;
        let rhs = self.add(cur)?;
        if matches!(cur.peek(), Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::Eq | Tok::Ne) {
            return Err(cur.error("comparison operators do not associate; add parentheses"));
        }
        Ok(Expr::Op { op: op.into(), args: vec![lhs, rhs], span })
    }

    fn add(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let mut lhs = self.mul(cur)?;
        loop {
            let op = match cur.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => return Ok(lhs),
            };
            let span = cur.next().span;
            let rhs = self.mul(cur)?;
            lhs = Expr::Op { op: op.into(), args: vec![lhs, rhs], span };
        }
    }

    fn mul(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary(cur)?;
        loop {
            let op = match cur.peek() {
                Tok::Star => "*",
                Tok::Slash => "/",
                Tok::Percent => "%",
                _ => return Ok(lhs),
            };
            let span = cur.next().span;
            let rhs = self.unary(cur)?;
            lhs = Expr::Op { op: op.into(), args: vec![lhs, rhs], span };
        }
    }

    fn unary(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        if cur.at(&Tok::Minus) {
            let span = cur.next().span;
            let e = cur.nested(|cur| self.unary(cur))?;
            return Ok(Expr::Op { op: "neg".into(), args: vec![e], span });
        }
        let e = self.atom(cur)?;
        if let Tok::Side(k) = *cur.peek() {
            if !self.relational {
                return Err(cur.error("side tags are only allowed in assertions"));
            }
            cur.next();
            let side = if k == 1 { Side::Left } else { Side::Right };
            return Ok(e.on_side(side));
        }
        Ok(e)
    }

    fn atom(&self, cur: &mut Cursor) -> Result<Expr, SyntaxError> {
        let span = cur.span();
        match cur.peek().clone() {
            Tok::Int(n) => {
                cur.next();
                Ok(Expr::Lit(Lit::Int(n)))
            }
            Tok::Dec(q, _) => {
                cur.next();
                Ok(Expr::Lit(Lit::Real(q)))
            }
            Tok::LParen => {
                cur.next();
                let e = self.implies(cur)?;
                cur.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                cur.next();
                let mut es = Vec::new();
                if !cur.at(&Tok::RBracket) {
                    loop {
                        es.push(self.implies(cur)?);
                        if !cur.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                cur.expect(&Tok::RBracket)?;
                Ok(Expr::Vector(es))
            }
            Tok::Ident(name) => {
                cur.next();
                match name.as_str() {
                    "true" => return Ok(Expr::Lit(Lit::Bool(true))),
                    "false" => return Ok(Expr::Lit(Lit::Bool(false))),
                    _ => {}
                }
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(SyntaxError::new(span, format!("unexpected keyword `{name}`")));
                }
                if cur.at(&Tok::LParen) {
                    cur.next();
                    let mut args = Vec::new();
                    if !cur.at(&Tok::RParen) {
                        loop {
                            args.push(self.implies(cur)?);
                            if !cur.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    cur.expect(&Tok::RParen)?;
                    return Ok(Expr::Op { op: name, args, span });
                }
                Ok(Expr::Var { name, side: None, span })
            }
            other => Err(cur.error(format!("expected expression, found {other}"))),
        }
    }
}

fn check_known_ops(p: &Program, table: &OpTable) -> Result<(), ParseError> {
    let declared: BTreeSet<&str> = p.prelude.ops.iter().map(|o| o.name.as_str()).collect();
    for o in &p.prelude.ops {
        if !table.has_evaluator(&o.name) {
            return Err(ParseError::UnknownOperation { name: o.name.clone(), span: Span::default() });
        }
    }
    let mut err = None;
    let mut check_expr = |e: &Expr| {
        let mut stack = vec![e];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Op { op, args, span } => {
                    if !BUILTIN_OPS.contains(&op.as_str()) && !declared.contains(op.as_str()) && err.is_none() {
                        err = Some(ParseError::UnknownOperation { name: op.clone(), span: *span });
                    }
                    stack.extend(args);
                }
                Expr::Vector(es) => stack.extend(es),
                _ => {}
            }
        }
    };
    for g in &p.prelude.globals {
        check_expr(&g.value);
    }
    p.body.visit_exprs(&mut check_expr);
    if let Some(e) = err {
        return Err(e);
    }
    let mut err = None;
    p.body.visit_dists(&mut |d| {
        if table.dist(&d.name).is_none() && err.is_none() {
            err = Some(ParseError::UnknownOperation { name: d.name.clone(), span: d.span });
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
