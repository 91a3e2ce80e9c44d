//! Exact interpreter over finite-support subdistributions.

use num_traits::{One, ToPrimitive, Zero};

use super::{ExecError, Machine};
use crate::measure::SubDist;
use crate::num::rational::parse_rational;
use crate::num::Rational;
use crate::syntax::ops::DistKind;
use crate::syntax::{Cmd, DistExpr};
use crate::value::{Memory, Value};

#[derive(Debug, Clone)]
pub struct ExactConfig {
    pub max_unroll: usize,
    /// Loops stop once the continuing mass falls below this.
    pub mass_tol: Rational,
    /// Atoms lighter than this are dropped inside loops; their mass joins the residual.
    pub prune_eps: Rational,
    /// Fail instead of reporting a residual above `mass_tol`.
    pub require_certain: bool,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_unroll: 10_000,
            mass_tol: parse_rational("1e-12").expect("literal"),
            prune_eps: parse_rational("1e-15").expect("literal"),
            require_certain: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactResult {
    pub dist: SubDist<Memory>,
    /// Upper bound on the mass missing from `dist` because loops were truncated.
    pub residual: Rational,
    /// Total number of loop unrollings performed.
    pub unroll_count: usize,
}

struct Run<'a> {
    machine: &'a Machine,
    cfg: &'a ExactConfig,
    residual: Rational,
    unrolls: usize,
}

/// `⟦c⟧(m)` with loops as suprema of their bounded unrollings.
pub fn interp_exact(machine: &Machine, c: &Cmd, m: &Memory, cfg: &ExactConfig) -> Result<ExactResult, ExecError> {
    interp_exact_dist(machine, c, &SubDist::dirac(m.clone()), cfg)
}

/// Kleisli extension of [`interp_exact`] to an input distribution.
pub fn interp_exact_dist(
    machine: &Machine,
    c: &Cmd,
    input: &SubDist<Memory>,
    cfg: &ExactConfig,
) -> Result<ExactResult, ExecError> {
    let mut run = Run { machine, cfg, residual: Rational::zero(), unrolls: 0 };
    let dist = run.exec(c, input.clone())?;
    if cfg.require_certain && run.residual > cfg.mass_tol {
        return Err(ExecError::UnrollBudgetExceeded(crate::num::format_rational(&run.residual)));
    }
    Ok(ExactResult { dist, residual: run.residual, unroll_count: run.unrolls })
}

impl Run<'_> {
    fn exec(&mut self, c: &Cmd, d: SubDist<Memory>) -> Result<SubDist<Memory>, ExecError> {
        if d.is_empty() {
            return Ok(d);
        }
        match c {
            Cmd::Skip => Ok(d),
            Cmd::Null => Ok(SubDist::zero()),
            Cmd::Assign { var, expr, .. } => {
                let mut pairs = Vec::with_capacity(d.len());
                for (m, w) in d.iter() {
                    let v = self.machine.eval(expr, m)?;
                    pairs.push((self.machine.store(m, var, v), w.clone()));
                }
                Ok(SubDist::from_weights(pairs)?)
            }
            Cmd::Sample { var, dist, .. } => {
                let mut pairs = Vec::new();
                for (m, w) in d.iter() {
                    for (v, p) in self.mechanism(dist, m)? {
                        pairs.push((self.machine.store(m, var, v), w * p));
                    }
                }
                Ok(SubDist::from_weights(pairs)?)
            }
            Cmd::Seq(a, b) => {
                let mid = self.exec(a, d)?;
                self.exec(b, mid)
            }
            Cmd::If { cond, then_branch, else_branch, .. } => {
                let (t, f) = self.split(cond, &d)?;
                let t = self.exec(then_branch, t)?;
                let f = self.exec(else_branch, f)?;
                Ok(t.add(&f))
            }
            Cmd::While { cond, body, .. } => {
                let mut done = SubDist::zero();
                let mut cur = d;
                let mut iter = 0usize;
                loop {
                    let (t, f) = self.split(cond, &cur)?;
                    done = done.add(&f);
                    if t.is_empty() {
                        break;
                    }
                    let mass = t.mass();
                    if iter >= self.cfg.max_unroll || mass < self.cfg.mass_tol {
                        self.residual += mass;
                        break;
                    }
                    let next = self.exec(body, t.clone())?;
                    iter += 1;
                    self.unrolls += 1;
                    if next == t {
                        // stuck: every further unrolling ends in the null branch
                        self.residual += mass;
                        break;
                    }
                    let (kept, dropped) = next.prune(&self.cfg.prune_eps);
                    self.residual += dropped;
                    cur = kept;
                }
                Ok(done)
            }
        }
    }

    fn split(&self, cond: &crate::syntax::Expr, d: &SubDist<Memory>) -> Result<(SubDist<Memory>, SubDist<Memory>), ExecError> {
        let mut t = Vec::new();
        let mut f = Vec::new();
        for (m, w) in d.iter() {
            if self.machine.eval_bool(cond, m)? {
                t.push((m.clone(), w.clone()));
            } else {
                f.push((m.clone(), w.clone()));
            }
        }
        Ok((SubDist::from_weights(t)?, SubDist::from_weights(f)?))
    }

    fn mechanism(&self, d: &DistExpr, m: &Memory) -> Result<Vec<(Value, Rational)>, ExecError> {
        let sig = self.machine.table.dist(&d.name).ok_or_else(|| ExecError::UnknownDistribution(d.name.clone()))?;
        if sig.kind == DistKind::Continuous {
            return Err(ExecError::ContinuousInExactMode(d.name.clone()));
        }
        let params: Vec<Value> = d.params.iter().map(|e| self.machine.eval(e, m)).collect::<Result<_, _>>()?;
        let args: Vec<Value> = d.args.iter().map(|e| self.machine.eval(e, m)).collect::<Result<_, _>>()?;
        discrete_support(&d.name, &params, &args)
    }
}

fn probability(name: &str, v: &Value) -> Result<Rational, ExecError> {
    let p = v
        .as_rational()
        .ok_or_else(|| ExecError::BadParameter(name.to_string(), format!("{v} is not an exact number")))?;
    if p < Rational::zero() || p > Rational::one() {
        return Err(ExecError::BadParameter(name.to_string(), format!("{v} is not a probability")));
    }
    Ok(p)
}

/// Output table of a discrete mechanism, zero-weight outcomes removed.
pub fn discrete_support(name: &str, params: &[Value], args: &[Value]) -> Result<Vec<(Value, Rational)>, ExecError> {
    let out = match (name, params, args) {
        ("bern", [p], []) => {
            let p = probability(name, p)?;
            vec![(Value::int(1), p.clone()), (Value::int(0), Rational::one() - p)]
        }
        ("unif", [n], []) => {
            let n = n
                .as_int()
                .and_then(|n| n.to_i64())
                .filter(|n| *n >= 1 && *n <= 1_000_000)
                .ok_or_else(|| ExecError::BadParameter(name.into(), format!("{n} is not a positive size")))?;
            let w = Rational::new(1.into(), n.into());
            (0..n).map(|k| (Value::int(k), w.clone())).collect()
        }
        ("rr", [p], [b]) => {
            let p = probability(name, p)?;
            let b = b.as_bool().ok_or_else(|| ExecError::BadParameter(name.into(), "argument must be bool".into()))?;
            vec![(Value::Bool(b), p.clone()), (Value::Bool(!b), Rational::one() - p)]
        }
        _ => return Err(ExecError::UnknownDistribution(name.to_string())),
    };
    Ok(out.into_iter().filter(|(_, w)| !w.is_zero()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::ratio;
    use crate::syntax::{desugar_bounded, parse, OpTable};
    use std::collections::BTreeMap;

    fn run(src: &str, init: &[(&str, Value)]) -> ExactResult {
        let p = parse(src).unwrap();
        let (machine, env) = Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).unwrap();
        let mut m = env.default_memory();
        for (k, v) in init {
            m.set(k, v.clone());
        }
        interp_exact(&machine, &p.body, &m, &ExactConfig::default()).unwrap()
    }

    fn mem(pairs: &[(&str, i64)]) -> Memory {
        Memory::from_pairs(pairs.iter().map(|(k, v)| (*k, Value::int(*v))))
    }

    #[test]
    fn straight_line() {
        let r = run("var x:int; x <- 1; skip", &[]);
        assert_eq!(r.dist, SubDist::dirac(mem(&[("x", 1)])));
        assert_eq!(r.residual, Rational::zero());
    }

    #[test]
    fn coin_copy() {
        let r = run("var x:int, y:int; x <$ bern(1/2); y <- x", &[]);
        let want = SubDist::from_weights([(mem(&[("x", 0), ("y", 0)]), ratio(1, 2)), (mem(&[("x", 1), ("y", 1)]), ratio(1, 2))]).unwrap();
        assert_eq!(r.dist, want);
    }

    #[test]
    fn divergence_is_all_residual() {
        let r = run("var x:int; while true do { skip }", &[]);
        assert_eq!(r.dist, SubDist::zero());
        assert_eq!(r.residual, Rational::one());
    }

    #[test]
    fn geometric_loop_converges() {
        let r = run("var x:int, n:int; x <- 1; while x = 1 do { x <$ bern(1/2); n <- n + 1 }", &[]);
        assert!(r.residual < parse_rational("1e-12").unwrap());
        assert_eq!(r.dist.event_prob(|m| m.get("n") == Some(&Value::int(1))), ratio(1, 2));
        assert!(Rational::one() - r.dist.mass() <= r.residual);
    }

    #[test]
    fn continuous_is_rejected() {
        let p = parse("var x:real; x <$ lap(1)(0)").unwrap();
        let (machine, env) = Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).unwrap();
        let e = interp_exact(&machine, &p.body, &env.default_memory(), &ExactConfig::default()).unwrap_err();
        assert_eq!(e, ExecError::ContinuousInExactMode("lap".into()));
    }

    #[test]
    fn bounded_unrollings_are_monotone() {
        let p = parse("var x:int, n:int; while x < 3 do { x <$ unif(4); n <- n + 1 }").unwrap();
        let (machine, env) = Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).unwrap();
        let (cond, body) = match &p.body {
            Cmd::While { cond, body, .. } => (cond, body),
            _ => unreachable!(),
        };
        let m = env.default_memory();
        let mut prev = SubDist::zero();
        for n in 0..6 {
            let d = interp_exact(&machine, &desugar_bounded(cond, body, n), &m, &ExactConfig::default()).unwrap().dist;
            assert!(prev.dominated_by(&d));
            prev = d;
        }
    }
}
