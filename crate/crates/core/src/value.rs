//! Runtime values and memories.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::num::{format_rational, Rational};
use crate::num::rational::to_f64;

/// A double with total order, used for reals produced by the sampling interpreter.
#[derive(Clone, Copy, Debug)]
pub struct F64(pub f64);

impl PartialEq for F64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for F64 {}
impl PartialOrd for F64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for F64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl Hash for F64 {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    /// Exact real.
    Real(Rational),
    /// Sampled real (sampling interpreter only).
    Float(F64),
    Vector(Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }

    pub fn real(q: Rational) -> Self {
        Value::Real(q)
    }

    pub fn float(x: f64) -> Self {
        Value::Float(F64(x))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_int().and_then(|n| n.to_i64())
    }

    /// Exact numeric view (ints are promoted).
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Value::Int(n) => Some(Rational::from_integer(n.clone())),
            Value::Real(q) => Some(q.clone()),
            _ => None,
        }
    }

    /// Floating view of any numeric value.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(n) => n.to_f64(),
            Value::Real(q) => Some(to_f64(q)),
            Value::Float(x) => Some(x.0),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Vector(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            Value::Float(_) => false,
            Value::Vector(vs) => vs.iter().all(Value::is_exact),
            _ => true,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Real(_) | Value::Float(_) => "real",
            Value::Vector(_) => "vector",
        }
    }

    pub fn is_zero_numeric(&self) -> bool {
        match self {
            Value::Int(n) => n.is_zero(),
            Value::Real(q) => q.is_zero(),
            Value::Float(x) => x.0 == 0.0,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(q) => write!(f, "{}", format_rational(q)),
            Value::Float(x) => write!(f, "{:?}", x.0),
            Value::Vector(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A memory: variable name to value, kept in sorted variable order.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Memory(BTreeMap<String, Value>);

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        Memory(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.0.insert(name.to_string(), value);
    }

    pub fn with(&self, name: &str, value: Value) -> Self {
        let mut m = self.clone();
        m.set(name, value);
        m
    }

    pub fn without(&self, name: &str) -> Self {
        let mut m = self.clone();
        m.0.remove(name);
        m
    }

    /// Restriction to the given variables.
    pub fn project<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Self {
        Memory(names.into_iter().filter_map(|n| self.0.get(n).map(|v| (n.to_string(), v.clone()))).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::ratio;

    #[test]
    fn memory_is_canonical() {
        let a = Memory::from_pairs([("y", Value::int(2)), ("x", Value::Bool(true))]);
        let b = Memory::from_pairs([("x", Value::Bool(true)), ("y", Value::int(2))]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{x=true, y=2}");
    }

    #[test]
    fn numeric_views() {
        assert_eq!(Value::int(3).as_rational(), Some(ratio(3, 1)));
        assert_eq!(Value::real(ratio(1, 4)).as_f64(), Some(0.25));
        assert!(!Value::float(0.5).is_exact());
        assert_eq!(Value::Vector(vec![Value::int(1), Value::real(ratio(1, 2))]).to_string(), "[1, 0.5]");
    }
}
