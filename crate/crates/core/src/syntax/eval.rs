//! Expression evaluation over exact values, falling back to doubles as soon as
//! a sampled real is involved.

use std::cmp::Ordering;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::ast::{Expr, Lit, Side};
use super::ops::OpTable;
use crate::num::Rational;
use crate::value::{Memory, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type mismatch in `{0}`")]
    TypeMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("bad arguments to `{0}`")]
    BadArguments(String),
}

/// Variable resolution for evaluation.
pub trait Scope {
    fn lookup(&self, name: &str, side: Option<Side>) -> Option<Value>;
}

/// A program memory backed by the global constants.
pub struct MemScope<'a> {
    pub mem: &'a Memory,
    pub globals: &'a Memory,
}

impl Scope for MemScope<'_> {
    fn lookup(&self, name: &str, _side: Option<Side>) -> Option<Value> {
        self.mem.get(name).or_else(|| self.globals.get(name)).cloned()
    }
}

/// A pair of memories; untagged variables resolve on the left.
pub struct PairScope<'a> {
    pub left: &'a Memory,
    pub right: &'a Memory,
    pub globals: &'a Memory,
}

impl Scope for PairScope<'_> {
    fn lookup(&self, name: &str, side: Option<Side>) -> Option<Value> {
        let m = match side {
            Some(Side::Right) => self.right,
            _ => self.left,
        };
        m.get(name).or_else(|| self.globals.get(name)).cloned()
    }
}

pub fn eval_expr(e: &Expr, scope: &dyn Scope, table: &OpTable) -> Result<Value, EvalError> {
    match e {
        Expr::Var { name, side, .. } => scope.lookup(name, *side).ok_or_else(|| EvalError::Unbound(name.clone())),
        Expr::Lit(Lit::Bool(b)) => Ok(Value::Bool(*b)),
        Expr::Lit(Lit::Int(n)) => Ok(Value::Int(n.clone())),
        Expr::Lit(Lit::Real(q)) => Ok(Value::Real(q.clone())),
        Expr::Vector(es) => Ok(Value::Vector(es.iter().map(|x| eval_expr(x, scope, table)).collect::<Result<_, _>>()?)),
        Expr::Op { op, args, .. } => {
            // short-circuit the connectives so guards like `i < n && a(i)` stay total
            match op.as_str() {
                "&&" | "||" | "=>" if args.len() == 2 => {
                    let a = as_bool(op, &eval_expr(&args[0], scope, table)?)?;
                    let short = match op.as_str() {
                        "&&" => (!a).then_some(false),
                        "||" => a.then_some(true),
                        _ => (!a).then_some(true),
                    };
                    if let Some(v) = short {
                        return Ok(Value::Bool(v));
                    }
                    return Ok(Value::Bool(as_bool(op, &eval_expr(&args[1], scope, table)?)?));
                }
                _ => {}
            }
            let vals: Vec<Value> = args.iter().map(|a| eval_expr(a, scope, table)).collect::<Result<_, _>>()?;
            apply_op(op, &vals, table)
        }
    }
}

fn as_bool(op: &str, v: &Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::TypeMismatch(op.to_string()))
}

#[derive(Clone, Debug)]
enum Num {
    Int(num_bigint::BigInt),
    Exact(Rational),
    Float(f64),
}

fn num(op: &str, v: &Value) -> Result<Num, EvalError> {
    match v {
        Value::Int(n) => Ok(Num::Int(n.clone())),
        Value::Real(q) => Ok(Num::Exact(q.clone())),
        Value::Float(x) => Ok(Num::Float(x.0)),
        _ => Err(EvalError::TypeMismatch(op.to_string())),
    }
}

impl Num {
    fn exact(&self) -> Option<Rational> {
        match self {
            Num::Int(n) => Some(Rational::from_integer(n.clone())),
            Num::Exact(q) => Some(q.clone()),
            Num::Float(_) => None,
        }
    }

    fn float(&self) -> f64 {
        match self {
            Num::Int(n) => Value::Int(n.clone()).as_f64().unwrap_or(f64::NAN),
            Num::Exact(q) => crate::num::rational::to_f64(q),
            Num::Float(x) => *x,
        }
    }

    fn into_value(self) -> Value {
        match self {
            Num::Int(n) => Value::Int(n),
            Num::Exact(q) => Value::Real(q),
            Num::Float(x) => Value::float(x),
        }
    }
}

fn arith(op: &str, a: Num, b: Num) -> Result<Num, EvalError> {
    if let (Num::Int(x), Num::Int(y)) = (&a, &b) {
        return Ok(match op {
            "+" => Num::Int(x + y),
            "-" => Num::Int(x - y),
            "*" => Num::Int(x * y),
            "%" => {
                if y.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Num::Int(x.mod_floor(y))
            }
            "/" => {
                if y.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Num::Exact(Rational::new(x.clone(), y.clone()))
            }
            _ => return Err(EvalError::UnknownOperation(op.to_string())),
        });
    }
    if op == "%" {
        return Err(EvalError::TypeMismatch(op.to_string()));
    }
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => Ok(Num::Exact(match op {
            "+" => x + y,
            "-" => x - y,
            "*" => x * y,
            "/" => {
                if y.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                x / y
            }
            _ => return Err(EvalError::UnknownOperation(op.to_string())),
        })),
        _ => {
            let (x, y) = (a.float(), b.float());
            Ok(Num::Float(match op {
                "+" => x + y,
                "-" => x - y,
                "*" => x * y,
                "/" => x / y,
                _ => return Err(EvalError::UnknownOperation(op.to_string())),
            }))
        }
    }
}

fn compare_nums(a: &Num, b: &Num) -> Ordering {
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => a.float().partial_cmp(&b.float()).unwrap_or(Ordering::Equal),
    }
}

fn values_equal(op: &str, a: &Value, b: &Value) -> Result<bool, EvalError> {
    match (a, b) {
        (Value::Bool(x), Value::Bool(y)) => Ok(x == y),
        (Value::Vector(xs), Value::Vector(ys)) => {
            if xs.len() != ys.len() {
                return Ok(false);
            }
            for (x, y) in xs.iter().zip(ys) {
                if !values_equal(op, x, y)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Ok(compare_nums(&num(op, a)?, &num(op, b)?) == Ordering::Equal),
    }
}

pub fn apply_op(op: &str, vals: &[Value], table: &OpTable) -> Result<Value, EvalError> {
    let bad = || EvalError::BadArguments(op.to_string());
    match (op, vals) {
        ("+" | "-" | "*" | "/" | "%", [a, b]) => Ok(arith(op, num(op, a)?, num(op, b)?)?.into_value()),
        ("neg", [a]) => Ok(match num(op, a)? {
            Num::Int(n) => Value::Int(-n),
            Num::Exact(q) => Value::Real(-q),
            Num::Float(x) => Value::float(-x),
        }),
        ("abs", [a]) => Ok(match num(op, a)? {
            Num::Int(n) => Value::Int(n.abs()),
            Num::Exact(q) => Value::Real(q.abs()),
            Num::Float(x) => Value::float(x.abs()),
        }),
        ("min" | "max", [a, b]) => {
            let (x, y) = (num(op, a)?, num(op, b)?);
            let pick_first = match compare_nums(&x, &y) {
                Ordering::Greater => op == "max",
                Ordering::Less => op == "min",
                Ordering::Equal => true,
            };
            // mixed int/real promotes
            let r = if pick_first { x } else { y };
            let promote = matches!(a, Value::Real(_) | Value::Float(_)) || matches!(b, Value::Real(_) | Value::Float(_));
            Ok(match (r, promote) {
                (Num::Int(n), true) => Value::Real(Rational::from_integer(n)),
                (r, _) => r.into_value(),
            })
        }
        ("<" | "<=" | ">" | ">=", [a, b]) => {
            let o = compare_nums(&num(op, a)?, &num(op, b)?);
            Ok(Value::Bool(match op {
                "<" => o == Ordering::Less,
                "<=" => o != Ordering::Greater,
                ">" => o == Ordering::Greater,
                _ => o != Ordering::Less,
            }))
        }
        ("=", [a, b]) => Ok(Value::Bool(values_equal(op, a, b)?)),
        ("!=", [a, b]) => Ok(Value::Bool(!values_equal(op, a, b)?)),
        ("&&", [a, b]) => Ok(Value::Bool(as_bool(op, a)? && as_bool(op, b)?)),
        ("||", [a, b]) => Ok(Value::Bool(as_bool(op, a)? || as_bool(op, b)?)),
        ("=>", [a, b]) => Ok(Value::Bool(!as_bool(op, a)? || as_bool(op, b)?)),
        ("!", [a]) => Ok(Value::Bool(!as_bool(op, a)?)),
        ("+" | "-" | "*" | "/" | "%" | "neg" | "abs" | "min" | "max" | "<" | "<=" | ">" | ">=" | "=" | "!=" | "&&"
        | "||" | "=>" | "!", _) => Err(bad()),
        _ => match table.evaluator(op) {
            Some(f) => f(vals),
            None => Err(EvalError::UnknownOperation(op.to_string())),
        },
    }
}

/// Evaluates a program expression in a memory.
pub fn eval_in(e: &Expr, mem: &Memory, globals: &Memory, table: &OpTable) -> Result<Value, EvalError> {
    eval_expr(e, &MemScope { mem, globals }, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::ratio;
    use crate::syntax::lexer::Cursor;
    use crate::syntax::parser::parse_expr;

    fn ev(src: &str, mem: &Memory) -> Result<Value, EvalError> {
        let e = parse_expr(&mut Cursor::new(src).unwrap(), false).unwrap();
        eval_in(&e, mem, &Memory::new(), &OpTable::default())
    }

    #[test]
    fn exact_arithmetic() {
        let m = Memory::from_pairs([("x", Value::int(3))]);
        assert_eq!(ev("x / 2", &m).unwrap(), Value::Real(ratio(3, 2)));
        assert_eq!(ev("x * 2 - 1", &m).unwrap(), Value::int(5));
        assert_eq!(ev("-7 % 3", &m).unwrap(), Value::int(2));
        assert_eq!(ev("x + 0.5", &m).unwrap(), Value::Real(ratio(7, 2)));
        assert_eq!(ev("max(x, 2.5)", &m).unwrap(), Value::Real(ratio(3, 1)));
        assert_eq!(ev("1 / 0", &m), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn floats_contaminate() {
        let m = Memory::from_pairs([("s", Value::float(0.25))]);
        assert_eq!(ev("s + 1", &m).unwrap(), Value::float(1.25));
        assert_eq!(ev("s < 1", &m).unwrap(), Value::Bool(true));
    }

    #[test]
    fn connectives_short_circuit() {
        let m = Memory::new();
        assert_eq!(ev("false && (1 / 0 = 1)", &m).unwrap(), Value::Bool(false));
        assert_eq!(ev("true || y", &m).unwrap(), Value::Bool(true));
        assert!(ev("y", &m).is_err());
    }

    #[test]
    fn prefix_sum_query() {
        let d = Value::Vector(vec![Value::Real(ratio(1, 2)), Value::int(2), Value::int(4)]);
        let m = Memory::from_pairs([("d", d)]);
        assert_eq!(ev("eval(3, 2, d)", &m).unwrap(), Value::Real(ratio(5, 2)));
        assert_eq!(ev("eval(3, 9, d)", &m).unwrap(), Value::Real(ratio(13, 2)));
    }
}
