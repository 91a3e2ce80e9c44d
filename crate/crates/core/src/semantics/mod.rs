//! Denotational (exact, finite-support) and Monte-Carlo semantics of pWHILE.

pub mod exact;
pub mod sample;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::measure::MeasureError;
use crate::syntax::eval::{eval_in, EvalError};
use crate::syntax::types::{coerce, typecheck, TypeEnv, TypeError};
use crate::syntax::{Expr, OpTable, Program, Ty};
use crate::value::{Memory, Value};

pub use exact::{interp_exact, ExactConfig, ExactResult};
pub use sample::{interp_sample, SampleConfig, SampleResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("`{0}` samples a continuous distribution; the exact interpreter needs finite supports")]
    ContinuousInExactMode(String),
    #[error("loop budget exhausted with residual mass {0}")]
    UnrollBudgetExceeded(String),
    #[error("bad parameter for `{0}`: {1}")]
    BadParameter(String, String),
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Everything an interpreter needs besides the command: global constants,
/// the operation table and resolved variable types.
#[derive(Debug, Clone)]
pub struct Machine {
    pub globals: Memory,
    pub table: OpTable,
    pub types: BTreeMap<String, Ty>,
}

impl Machine {
    pub fn new(env: &TypeEnv, globals: Memory) -> Self {
        Self {
            globals,
            table: env.table().clone(),
            types: env.ctx.iter().map(|(n, t)| (n.clone(), t.clone())).collect(),
        }
    }

    /// Typechecks the program and evaluates its constants with the given parameter overrides.
    pub fn for_program(
        p: &Program,
        table: &OpTable,
        overrides: &BTreeMap<String, Value>,
    ) -> Result<(Self, TypeEnv), ExecError> {
        let env = typecheck(p, table)?;
        let globals = crate::syntax::types::eval_globals(p, overrides, table)?;
        Ok((Self::new(&env, globals), env))
    }

    pub fn eval(&self, e: &Expr, m: &Memory) -> Result<Value, EvalError> {
        eval_in(e, m, &self.globals, &self.table)
    }

    pub fn eval_bool(&self, e: &Expr, m: &Memory) -> Result<bool, EvalError> {
        self.eval(e, m)?.as_bool().ok_or_else(|| EvalError::TypeMismatch("guard".into()))
    }

    /// Stores a value, promoting ints into real slots.
    pub fn store(&self, m: &Memory, var: &str, v: Value) -> Memory {
        let v = match self.types.get(var) {
            Some(t) => coerce(t, v),
            None => v,
        };
        m.with(var, v)
    }
}
