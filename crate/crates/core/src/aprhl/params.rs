//! Values of proof-script parameters and typed access to them.

use std::collections::BTreeMap;
use std::fmt;

use super::assertion::{parse_assertion, Assertion};
use crate::grade::Grade;
use crate::num::{format_rational, ExpNum, Rational};
use crate::syntax::lexer::Cursor;
use crate::syntax::parser::parse_expr;
use crate::syntax::{parse_cmd, print_expr, Cmd, Expr};

#[derive(Debug, Clone, PartialEq)]
pub enum SValue {
    Num(Rational),
    /// Exact sum of exponentials, produced by `exp(..)`.
    Exp(ExpNum),
    Str(String),
    Bool(bool),
    Tuple(Vec<SValue>),
}

impl SValue {
    pub fn as_exp(&self) -> Option<ExpNum> {
        match self {
            SValue::Num(q) => Some(ExpNum::rational(q.clone())),
            SValue::Exp(e) => Some(e.clone()),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            SValue::Num(_) => "number",
            SValue::Exp(_) => "exponential",
            SValue::Str(_) => "string",
            SValue::Bool(_) => "bool",
            SValue::Tuple(_) => "tuple",
        }
    }
}

impl fmt::Display for SValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SValue::Num(q) => {
                // integers print bare so they can be spliced into code
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}", print_expr(&Expr::real(q.clone())))
                }
            }
            SValue::Exp(e) => write!(f, "{e}"),
            SValue::Str(s) => write!(f, "{s}"),
            SValue::Bool(b) => write!(f, "{b}"),
            SValue::Tuple(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    Missing(String),
    Invalid { param: String, message: String },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::Missing(p) => write!(f, "missing parameter `{p}`"),
            ParamError::Invalid { param, message } => write!(f, "parameter `{param}`: {message}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(pub BTreeMap<String, SValue>);

impl Params {
    pub fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn invalid(key: &str, message: impl Into<String>) -> ParamError {
        ParamError::Invalid { param: key.to_string(), message: message.into() }
    }

    pub fn get(&self, key: &str) -> Result<&SValue, ParamError> {
        self.0.get(key).ok_or_else(|| ParamError::Missing(key.to_string()))
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, ParamError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(SValue::Str(s)) => Ok(Some(s.clone())),
            Some(v) => Err(Self::invalid(key, format!("expected a string, found {}", v.type_name()))),
        }
    }

    pub fn assertion(&self, key: &str) -> Result<Option<Assertion>, ParamError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(SValue::Str(s)) => parse_assertion(s).map(Some).map_err(|e| Self::invalid(key, e.to_string())),
            Some(SValue::Bool(b)) => Ok(Some(if *b { Assertion::True } else { Assertion::False })),
            Some(v) => Err(Self::invalid(key, format!("expected an assertion string, found {}", v.type_name()))),
        }
    }

    pub fn cmd(&self, key: &str) -> Result<Option<Cmd>, ParamError> {
        match self.string(key)? {
            None => Ok(None),
            Some(s) => parse_cmd(&s).map(Some).map_err(|e| Self::invalid(key, e.to_string())),
        }
    }

    /// A program expression (no side tags).
    pub fn expr(&self, key: &str) -> Result<Option<Expr>, ParamError> {
        let Some(s) = self.string(key)? else { return Ok(None) };
        let parse = || -> Result<Expr, String> {
            let mut cur = Cursor::new(&s).map_err(|e| e.to_string())?;
            let e = parse_expr(&mut cur, false).map_err(|e| e.to_string())?;
            if !cur.at_eof() {
                return Err("unexpected input after expression".into());
            }
            Ok(e)
        };
        parse().map(Some).map_err(|m| Self::invalid(key, m))
    }

    pub fn number(&self, key: &str) -> Result<Option<Rational>, ParamError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(SValue::Num(q)) => Ok(Some(q.clone())),
            Some(v) => Err(Self::invalid(key, format!("expected a number, found {}", v.type_name()))),
        }
    }

    pub fn integer(&self, key: &str) -> Result<Option<i64>, ParamError> {
        match self.number(key)? {
            None => Ok(None),
            Some(q) if q.is_integer() => {
                num_traits::ToPrimitive::to_i64(q.numer()).map(Some).ok_or_else(|| Self::invalid(key, "out of range"))
            }
            Some(q) => Err(Self::invalid(key, format!("{} is not an integer", format_rational(&q)))),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, ParamError> {
        match self.0.get(key) {
            None => Ok(false),
            Some(SValue::Bool(b)) => Ok(*b),
            Some(v) => Err(Self::invalid(key, format!("expected a bool, found {}", v.type_name()))),
        }
    }

    pub fn grade(&self, key: &str) -> Result<Option<Grade>, ParamError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => value_to_grade(v).map(Some).map_err(|m| Self::invalid(key, m)),
        }
    }
}

pub fn value_to_grade(v: &SValue) -> Result<Grade, String> {
    match v {
        SValue::Tuple(xs) if xs.len() == 2 => {
            let g = xs[0].as_exp().ok_or("γ must be numeric")?;
            let d = xs[1].as_exp().ok_or("δ must be numeric")?;
            if d.signum() == std::cmp::Ordering::Less {
                return Err("δ must be nonnegative".into());
            }
            Grade::new(g, d).map_err(|e| e.to_string())
        }
        _ => Err("expected a grade tuple (γ, δ)".into()),
    }
}
