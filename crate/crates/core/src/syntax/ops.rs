//! Operation table: evaluators for declared deterministic operations and
//! signatures of the distribution operations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};

use super::ast::Ty;
use super::eval::EvalError;
use crate::num::Rational;
use crate::value::Value;

/// Operators and functions understood by every program without declaration.
pub const BUILTIN_OPS: &[&str] = &[
    "+", "-", "*", "/", "%", "neg", "<", "<=", ">", ">=", "=", "!=", "&&", "||", "!", "=>", "min", "max", "abs",
];

pub type OpFn = Arc<dyn Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistKind {
    /// Finite support; usable by the exact interpreter.
    Discrete,
    /// Density on the reals; sampling only.
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistSig {
    pub params: Vec<Ty>,
    pub args: Vec<Ty>,
    pub ret: Ty,
    pub kind: DistKind,
}

#[derive(Clone)]
pub struct OpTable {
    evaluators: BTreeMap<String, OpFn>,
    dists: BTreeMap<String, DistSig>,
}

impl fmt::Debug for OpTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpTable")
            .field("evaluators", &self.evaluators.keys().collect::<Vec<_>>())
            .field("dists", &self.dists.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for OpTable {
    fn default() -> Self {
        let mut t = OpTable { evaluators: BTreeMap::new(), dists: BTreeMap::new() };
        t.register("eval", Arc::new(prefix_sum_query));
        use DistKind::*;
        let real_mech = |kind| DistSig { params: vec![Ty::Real], args: vec![Ty::Real], ret: Ty::Real, kind };
        t.dists.insert("lap".into(), real_mech(Continuous));
        t.dists.insert("gauss".into(), real_mech(Continuous));
        t.dists.insert("cauchy".into(), real_mech(Continuous));
        t.dists.insert("bern".into(), DistSig { params: vec![Ty::Real], args: vec![], ret: Ty::Int, kind: Discrete });
        t.dists.insert("unif".into(), DistSig { params: vec![Ty::Int], args: vec![], ret: Ty::Int, kind: Discrete });
        t.dists.insert("rr".into(), DistSig { params: vec![Ty::Real], args: vec![Ty::Bool], ret: Ty::Bool, kind: Discrete });
        t
    }
}

impl OpTable {
    /// Registers (or replaces) the evaluator of a declared operation.
    pub fn register(&mut self, name: &str, f: OpFn) {
        self.evaluators.insert(name.to_string(), f);
    }

    pub fn has_evaluator(&self, name: &str) -> bool {
        self.evaluators.contains_key(name)
    }

    pub fn evaluator(&self, name: &str) -> Option<&OpFn> {
        self.evaluators.get(name)
    }

    pub fn dist(&self, name: &str) -> Option<&DistSig> {
        self.dists.get(name)
    }
}

/// Default query evaluator `eval(Q, i, d)`: sum of the first `min(i, len d)`
/// coordinates of `d`. Each coordinate enters with coefficient at most one, so
/// the result is 1-sensitive in `d` under the L1 distance.
fn prefix_sum_query(args: &[Value]) -> Result<Value, EvalError> {
    let (i, d) = match args {
        [_, i, Value::Vector(d)] => (i, d),
        _ => return Err(EvalError::BadArguments("eval".into())),
    };
    let k = i.as_int().and_then(|n| n.to_usize()).unwrap_or(0).min(d.len());
    let prefix = &d[..k];
    if prefix.iter().all(Value::is_exact) {
        let mut s = Rational::zero();
        for v in prefix {
            s += v.as_rational().ok_or_else(|| EvalError::BadArguments("eval".into()))?;
        }
        Ok(Value::Real(s))
    } else {
        let s: f64 = prefix.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).sum();
        Ok(Value::float(s))
    }
}
