//! Pretty-printer; its output reparses to the same AST.

use std::fmt::Write;

use super::ast::*;
use crate::num::rational::to_decimal_string;
use crate::num::{format_rational, Rational};

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Op { op, args, .. } => match (op.as_str(), args.len()) {
            ("=>", 2) => 0,
            ("||", 2) => 1,
            ("&&", 2) => 2,
            ("!", 1) => 3,
            ("<" | "<=" | ">" | ">=" | "=" | "!=", 2) => 4,
            ("+" | "-", 2) => 5,
            ("*" | "/" | "%", 2) => 6,
            ("neg", 1) => 7,
            _ => 8,
        },
        Expr::Lit(Lit::Int(n)) if *n < 0.into() => 7,
        Expr::Lit(Lit::Real(q)) if *q < Rational::from_integer(0.into()) => 7,
        _ => 8,
    }
}

fn real_literal(q: &Rational) -> String {
    if q.is_integer() {
        return format!("{}.0", q.numer());
    }
    match to_decimal_string(q) {
        Some(s) => s,
        None => format!("({})", format_rational(q).replace('/', " / ")),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let p = prec(e);
    let paren = p < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Var { name, side, .. } => {
            out.push_str(name);
            if let Some(s) = side {
                let _ = write!(out, "<{}>", s.index());
            }
        }
        Expr::Lit(Lit::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Lit(Lit::Int(n)) => {
            let _ = write!(out, "{n}");
        }
        Expr::Lit(Lit::Real(q)) => out.push_str(&real_literal(q)),
        Expr::Vector(es) => {
            out.push('[');
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, x, 0);
            }
            out.push(']');
        }
        Expr::Op { op, args, .. } => match p {
            0 => {
                write_expr(out, &args[0], 1);
                out.push_str(" => ");
                write_expr(out, &args[1], 0);
            }
            1 | 2 | 5 | 6 => {
                write_expr(out, &args[0], p);
                let _ = write!(out, " {op} ");
                write_expr(out, &args[1], p + 1);
            }
            4 => {
                write_expr(out, &args[0], 5);
                let _ = write!(out, " {op} ");
                write_expr(out, &args[1], 5);
            }
            3 => {
                out.push('!');
                write_expr(out, &args[0], 3);
            }
            7 => {
                out.push('-');
                write_expr(out, &args[0], 7);
            }
            _ => {
                out.push_str(op);
                out.push('(');
                for (i, x) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_expr(out, x, 0);
                }
                out.push(')');
            }
        },
    }
    if paren {
        out.push(')');
    }
}

pub fn print_dist(d: &DistExpr) -> String {
    let list = |es: &[Expr]| es.iter().map(print_expr).collect::<Vec<_>>().join(", ");
    if d.args.is_empty() {
        format!("{}({})", d.name, list(&d.params))
    } else {
        format!("{}({})({})", d.name, list(&d.params), list(&d.args))
    }
}

pub fn print_cmd(c: &Cmd) -> String {
    let mut s = String::new();
    write_cmd(&mut s, c, 0);
    s
}

/// Single-line rendering used in reports.
pub fn print_cmd_inline(c: &Cmd) -> String {
    print_cmd(c).split_whitespace().collect::<Vec<_>>().join(" ")
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_block(out: &mut String, c: &Cmd, level: usize) {
    out.push_str("{\n");
    write_cmd(out, c, level + 1);
    out.push('\n');
    indent(out, level);
    out.push('}');
}

fn write_cmd(out: &mut String, c: &Cmd, level: usize) {
    match c {
        Cmd::Seq(a, b) => {
            if matches!(**a, Cmd::Seq(..)) {
                indent(out, level);
                write_block(out, a, level);
            } else {
                write_cmd(out, a, level);
            }
            out.push_str(";\n");
            write_cmd(out, b, level);
        }
        _ => {
            indent(out, level);
            match c {
                Cmd::Skip => out.push_str("skip"),
                Cmd::Null => out.push_str("null"),
                Cmd::Assign { var, expr, .. } => {
                    let _ = write!(out, "{var} <- {}", print_expr(expr));
                }
                Cmd::Sample { var, dist, .. } => {
                    let _ = write!(out, "{var} <$ {}", print_dist(dist));
                }
                Cmd::If { cond, then_branch, else_branch, .. } => {
                    let _ = write!(out, "if {} then ", print_expr(cond));
                    write_block(out, then_branch, level);
                    out.push_str(" else ");
                    write_block(out, else_branch, level);
                }
                Cmd::While { cond, body, .. } => {
                    let _ = write!(out, "while {} do ", print_expr(cond));
                    write_block(out, body, level);
                }
                Cmd::Seq(..) => unreachable!(),
            }
        }
    }
}

pub fn print_ty(t: &Ty) -> String {
    t.to_string()
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for t in &p.prelude.types {
        let _ = writeln!(out, "type {} = {};", t.name, t.def);
    }
    for g in &p.prelude.globals {
        let kw = if g.is_param { "param" } else { "const" };
        let _ = writeln!(out, "{kw} {}: {} = {};", g.name, g.ty, print_expr(&g.value));
    }
    for o in &p.prelude.ops {
        let args = o.args.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
        let _ = write!(out, "op {}({args}) -> {}", o.name, o.ret);
        if let Some((a, k)) = &o.sensitivity {
            let _ = write!(out, " sensitivity({a}, {})", format_rational(k));
        }
        out.push_str(";\n");
    }
    for (n, t) in p.ctx.iter() {
        let _ = writeln!(out, "var {n}: {t};");
    }
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str(&print_cmd(&p.body));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::{parse, parse_cmd};

    #[test]
    fn round_trips() {
        for src in [
            "x <- a - (b - c)",
            "x <- (a + b) * -c",
            "x <- !(a && b) || c",
            "x <- 1.0 + 0.25",
            "{ a <- 1; b <- 2 }; c <- 3",
            "if x < 1 then { skip } else { null }",
            "while i <= 3 do { i <- i + 1; s <$ bern(0.5) }",
            "x <$ lap(2 / eps)(eval(Q, j, d))",
        ] {
            let c = parse_cmd(src).unwrap();
            let printed = print_cmd(&c);
            assert_eq!(parse_cmd(&printed).unwrap(), c, "{printed}");
        }
    }

    #[test]
    fn program_round_trip() {
        let src = "type data = vec_real(2); const k: int = 2; param eps: real = 0.5;\n\
                   op eval(int, int, data) -> real sensitivity(data, 1);\n\
                   var d: data; var s: real;\n s <- eval(k, 1, d)";
        let p = parse(src).unwrap();
        assert_eq!(parse(&print_program(&p)).unwrap(), p);
    }
}
