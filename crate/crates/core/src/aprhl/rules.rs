//! Judgements and the rule handlers of the proof system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use super::assertion::Assertion;
use super::entail::{Entailer, Policy, Verdict};
use super::params::{value_to_grade, ParamError, Params, SValue};
use crate::grade::{grade_comp, grade_comp_min, grade_join, Grade};
use crate::mechanisms::named::{certify_named, GaussVariant, NamedKind};
use crate::mechanisms::window::Certificate;
use crate::num::{format_rational, ExpNum, Rational};
use crate::semantics::Machine;
use crate::syntax::ops::DistKind;
use crate::syntax::types::TypeEnv;
use crate::syntax::{print_cmd_inline, print_expr, Cmd, DistExpr, Expr, Side, Ty};

/// `⊨ left ~(γ,δ) right : pre ⇒ post`
#[derive(Debug, Clone, PartialEq)]
pub struct Judgement {
    pub left: Cmd,
    pub right: Cmd,
    pub pre: Assertion,
    pub post: Assertion,
    pub grade: Grade,
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|= {} ~{} {} : {} ==> {}",
            print_cmd_inline(&self.left),
            self.grade,
            print_cmd_inline(&self.right),
            self.pre,
            self.post
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("[{rule}] expects {expected} premise(s), found {found}")]
    Arity { rule: String, expected: String, found: usize },
    #[error("[{rule}] {error}")]
    Param { rule: String, error: String },
    #[error("[{rule}] {message}")]
    CommandShape { rule: String, message: String },
    #[error("[{rule}] premises do not fit: {message}")]
    PremiseMismatch { rule: String, message: String },
    #[error("[{rule}] side condition `{condition}` not discharged: {verdict}")]
    SideConditionFailed { rule: String, condition: String, verdict: Verdict },
    #[error("claimed grade {claimed} is below the computed grade {computed}")]
    GradeMismatch { claimed: String, computed: String },
    #[error("[{rule}] postcondition `{assertion}` is neither discrete nor an equality; composition is not admitted")]
    MeasurabilityRestriction { rule: String, assertion: String },
    #[error("[{rule}] frame variables {vars:?} are written by the commands")]
    FrameVariablesWritten { rule: String, vars: Vec<String> },
    #[error("[{rule}] mechanism certificate refused: {message}")]
    Certificate { rule: String, message: String },
}

/// Decides side conditions. The checker uses [`EntailDischarger`]; the
/// soundness fuzzer plugs in an oracle over finite universes.
pub trait Discharger: Sync {
    fn discharge(&self, env: &TypeEnv, machine: &Machine, hyp: &Assertion, goal: &Assertion) -> Verdict;

    /// Semantic justification of a frame whose variables are written;
    /// `None` when only the syntactic criterion is available.
    fn frame(&self, _env: &TypeEnv, _machine: &Machine, _theta: &Assertion, _left: &Cmd, _right: &Cmd) -> Option<Verdict> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct EntailDischarger {
    pub seed: u64,
    pub samples: usize,
}

impl Default for EntailDischarger {
    fn default() -> Self {
        EntailDischarger { seed: 0, samples: 10_000 }
    }
}

impl Discharger for EntailDischarger {
    fn discharge(&self, env: &TypeEnv, machine: &Machine, hyp: &Assertion, goal: &Assertion) -> Verdict {
        let mut e = Entailer::new(env, machine, self.seed);
        e.samples = self.samples;
        e.entails(hyp, goal)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SideCondition {
    pub rule: String,
    pub location: String,
    pub condition: String,
    pub hyp: String,
    pub goal: String,
    pub verdict: Verdict,
}

/// Deliberate grade corruptions used to test the soundness fuzzer itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// `[seq]` adds the multiplicative parts: `(γ+γ′, δ+δ′)`.
    SeqSum,
    /// `[comp]` takes the smaller of its two additive bounds.
    CompMin,
}

pub struct RuleCtx<'a> {
    pub env: &'a TypeEnv,
    pub machine: &'a Machine,
    pub discharger: &'a dyn Discharger,
    pub policy: Policy,
    pub mutation: Option<Mutation>,
    pub log: Vec<SideCondition>,
    pub certificates: Vec<(String, Certificate)>,
    /// Where the node being checked sits in the script.
    pub location: String,
    /// The node carries `assume: true`.
    pub assume: bool,
    cert_cache: BTreeMap<String, Certificate>,
}

impl<'a> RuleCtx<'a> {
    pub fn new(env: &'a TypeEnv, machine: &'a Machine, discharger: &'a dyn Discharger, policy: Policy) -> Self {
        RuleCtx {
            env,
            machine,
            discharger,
            policy,
            mutation: None,
            log: Vec::new(),
            certificates: Vec::new(),
            location: String::new(),
            assume: false,
            cert_cache: BTreeMap::new(),
        }
    }

    fn verdict_in(&self, env: &TypeEnv, hyp: &Assertion, goal: &Assertion) -> Verdict {
        let v = self.discharger.discharge(env, self.machine, hyp, goal);
        if !self.policy.accepts(&v)
            && self.assume
            && self.policy != Policy::Strict
            && !matches!(v, Verdict::Refuted { .. })
        {
            return Verdict::Assumed;
        }
        v
    }

    fn record(&mut self, rule: &str, condition: &str, hyp: &Assertion, goal: &Assertion, verdict: Verdict) -> Result<(), RuleError> {
        self.log.push(SideCondition {
            rule: rule.to_string(),
            location: self.location.clone(),
            condition: condition.to_string(),
            hyp: hyp.to_string(),
            goal: goal.to_string(),
            verdict: verdict.clone(),
        });
        if self.policy.accepts(&verdict) {
            Ok(())
        } else {
            Err(RuleError::SideConditionFailed { rule: rule.to_string(), condition: condition.to_string(), verdict })
        }
    }

    /// Discharges `hyp ⇒ goal` and logs the verdict.
    pub fn require(&mut self, rule: &str, condition: &str, hyp: &Assertion, goal: &Assertion) -> Result<(), RuleError> {
        let v = self.verdict_in(self.env, hyp, goal);
        self.record(rule, condition, hyp, goal, v)
    }

    fn seq_grade(&self, g1: &Grade, g2: &Grade) -> Grade {
        match self.mutation {
            Some(Mutation::SeqSum) => {
                Grade::new(g1.gamma() + g2.gamma(), g1.delta() + g2.delta()).expect("sum of valid grades")
            }
            _ => crate::grade::grade_seq(g1, g2),
        }
    }

    fn comp_grade(&self, g1: &Grade, g2: &Grade) -> Grade {
        match self.mutation {
            Some(Mutation::CompMin) => grade_comp_min(g1, g2),
            _ => grade_comp(g1, g2),
        }
    }

    fn certificate(&mut self, rule: &str, kind: &NamedKind, r: &Rational) -> Result<Certificate, RuleError> {
        let key = format!("{kind:?}@{}", format_rational(r));
        if let Some(c) = self.cert_cache.get(&key) {
            return Ok(c.clone());
        }
        let cert = certify_named(kind, r).map_err(|e| RuleError::Certificate { rule: rule.into(), message: e.to_string() })?;
        self.cert_cache.insert(key, cert.clone());
        self.certificates.push((self.location.clone(), cert.clone()));
        Ok(cert)
    }
}

/// Tags the program variables of `e` (not the globals) with `side`.
pub fn tag(env: &TypeEnv, e: &Expr, side: Side) -> Expr {
    e.map_vars(&mut |n, s, span| {
        let s = if s.is_none() && !env.is_global(n) { Some(side) } else { s };
        Expr::Var { name: n.to_string(), side: s, span }
    })
}

fn param<T>(rule: &str, r: Result<T, ParamError>) -> Result<T, RuleError> {
    r.map_err(|e| RuleError::Param { rule: rule.to_string(), error: e.to_string() })
}

fn required<T>(rule: &str, key: &str, r: Result<Option<T>, ParamError>) -> Result<T, RuleError> {
    param(rule, r)?.ok_or_else(|| RuleError::Param { rule: rule.to_string(), error: format!("missing parameter `{key}`") })
}

fn shape(rule: &str, message: impl Into<String>) -> RuleError {
    RuleError::CommandShape { rule: rule.to_string(), message: message.into() }
}

fn arity(rule: &str, expected: impl Into<String>, premises: &[Judgement], ok: bool) -> Result<(), RuleError> {
    if ok {
        Ok(())
    } else {
        Err(RuleError::Arity { rule: rule.to_string(), expected: expected.into(), found: premises.len() })
    }
}

fn checked_assertion(ctx: &RuleCtx, rule: &str, key: &str, params: &Params) -> Result<Option<Assertion>, RuleError> {
    let a = param(rule, params.assertion(key))?;
    if let Some(a) = &a {
        a.check(ctx.env).map_err(|m| RuleError::Param { rule: rule.into(), error: format!("parameter `{key}`: {m}") })?;
    }
    Ok(a)
}

fn checked_cmd(ctx: &RuleCtx, rule: &str, key: &str, params: &Params) -> Result<Option<Cmd>, RuleError> {
    let c = param(rule, params.cmd(key))?;
    if let Some(c) = &c {
        ctx.env.check_cmd(c).map_err(|e| RuleError::Param { rule: rule.into(), error: format!("parameter `{key}`: {e}") })?;
    }
    Ok(c)
}

fn checked_expr(ctx: &RuleCtx, rule: &str, key: &str, params: &Params) -> Result<Option<Expr>, RuleError> {
    let e = param(rule, params.expr(key))?;
    if let Some(e) = &e {
        ctx.env.infer(e, false).map_err(|err| RuleError::Param { rule: rule.into(), error: format!("parameter `{key}`: {err}") })?;
    }
    Ok(e)
}

/// Commands of a leaf: `cmd` for both sides, or `left`/`right` with `skip` as default.
fn leaf_cmds(ctx: &RuleCtx, rule: &str, params: &Params) -> Result<(Cmd, Cmd), RuleError> {
    if let Some(c) = checked_cmd(ctx, rule, "cmd", params)? {
        return Ok((c.clone(), c));
    }
    let l = checked_cmd(ctx, rule, "left", params)?;
    let r = checked_cmd(ctx, rule, "right", params)?;
    if l.is_none() && r.is_none() {
        return Err(RuleError::Param { rule: rule.into(), error: "missing parameter `cmd` (or `left`/`right`)".into() });
    }
    Ok((l.unwrap_or(Cmd::Skip), r.unwrap_or(Cmd::Skip)))
}

fn guards(ctx: &RuleCtx, rule: &str, params: &Params) -> Result<(Expr, Expr), RuleError> {
    let both = checked_expr(ctx, rule, "guard", params)?;
    let l = checked_expr(ctx, rule, "lguard", params)?.or_else(|| both.clone());
    let r = checked_expr(ctx, rule, "rguard", params)?.or(both);
    match (l, r) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(RuleError::Param { rule: rule.into(), error: "missing parameter `guard` (or `lguard` and `rguard`)".into() }),
    }
}

fn one_guard(ctx: &RuleCtx, rule: &str, params: &Params, side: &str) -> Result<Expr, RuleError> {
    match checked_expr(ctx, rule, "guard", params)? {
        Some(g) => Ok(g),
        None => required(rule, side, params.expr(side)),
    }
}

fn bool_eq(a: Expr, b: Expr) -> Assertion {
    Assertion::Atom(Expr::bin("=", a, b))
}

fn lit(q: &Rational) -> Expr {
    if q.is_integer() {
        Expr::Lit(crate::syntax::Lit::Int(q.numer().clone()))
    } else {
        Expr::real(q.clone())
    }
}

fn same_cmd(a: &Cmd, b: &Cmd) -> bool {
    a == b || a.equiv_modulo_seq(b)
}

/// Applies one rule to its checked premises and the node parameters.
pub fn apply_rule(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    ctx.assume = param(rule, params.flag("assume"))?;
    let natural = match rule {
        "skip" => rule_skip(ctx, rule, params, &premises)?,
        "assn" => rule_assn(ctx, rule, params, &premises)?,
        "absurd" => rule_absurd(ctx, rule, params, &premises)?,
        "rand" => rule_rand(ctx, rule, params, &premises)?,
        "rr" => rule_rr(ctx, rule, params, &premises)?,
        "lap" | "lapgen" | "lapnull" | "gauss" | "cauchy" => rule_mechanism(ctx, rule, params, &premises)?,
        "seq" => rule_seq(ctx, rule, params, premises)?,
        "cond" => rule_cond(ctx, rule, params, premises)?,
        "cond_l" | "cond_r" => rule_cond_one(ctx, rule, params, premises)?,
        "while" => rule_while(ctx, rule, params, premises)?,
        "case" => rule_case(ctx, rule, params, premises)?,
        "weak" => {
            arity(rule, "1", &premises, premises.len() == 1)?;
            premises.into_iter().next().expect("one premise")
        }
        "op" => {
            arity(rule, "1", &premises, premises.len() == 1)?;
            let j = premises.into_iter().next().expect("one premise");
            Judgement { left: j.right, right: j.left, pre: j.pre.opposite(), post: j.post.opposite(), grade: j.grade }
        }
        "comp" | "comp_endo" => rule_comp(ctx, rule, params, premises)?,
        "frame" => rule_frame(ctx, rule, params, premises)?,
        "forall_eq" => rule_forall_eq(ctx, rule, params, premises)?,
        other => return Err(RuleError::UnknownRule(other.to_string())),
    };
    finish(ctx, rule, params, natural)
}

/// Implicit weakening by the node's own `pre`, `post` and `grade`.
fn finish(ctx: &mut RuleCtx, rule: &str, params: &Params, mut j: Judgement) -> Result<Judgement, RuleError> {
    if let Some(pre) = checked_assertion(ctx, rule, "pre", params)? {
        if pre != j.pre {
            ctx.require(rule, "precondition", &pre, &j.pre)?;
            j.pre = pre;
        }
    }
    if let Some(post) = checked_assertion(ctx, rule, "post", params)? {
        if post != j.post {
            ctx.require(rule, "postcondition", &j.post, &post)?;
            j.post = post;
        }
    }
    if let Some(claim) = param(rule, params.grade("grade"))? {
        if !j.grade.leq(&claim) {
            return Err(RuleError::GradeMismatch { claimed: claim.to_string(), computed: j.grade.to_string() });
        }
        j.grade = claim;
    }
    Ok(j)
}

fn rule_skip(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: &[Judgement]) -> Result<Judgement, RuleError> {
    arity(rule, "0", premises, premises.is_empty())?;
    let phi = match checked_assertion(ctx, rule, "pre", params)? {
        Some(p) => p,
        None => required(rule, "post", params.assertion("post"))?,
    };
    Ok(Judgement { left: Cmd::Skip, right: Cmd::Skip, pre: phi.clone(), post: phi, grade: Grade::identity() })
}

fn rule_assn(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: &[Judgement]) -> Result<Judgement, RuleError> {
    arity(rule, "0", premises, premises.is_empty())?;
    let (c1, c2) = leaf_cmds(ctx, rule, params)?;
    let post = match checked_assertion(ctx, rule, "post", params)? {
        Some(p) => p,
        None => return Err(RuleError::Param { rule: rule.into(), error: "missing parameter `post`".into() }),
    };
    let mut pre = post.clone();
    for (c, side) in [(&c1, Side::Left), (&c2, Side::Right)] {
        match c {
            Cmd::Skip => {}
            Cmd::Assign { var, expr, .. } => {
                pre = pre.subst(var, side, &tag(ctx.env, expr, side)).map_err(|m| shape(rule, m))?;
            }
            other => return Err(shape(rule, format!("expected an assignment or skip, found `{}`", print_cmd_inline(other)))),
        }
    }
    Ok(Judgement { left: c1, right: c2, pre, post, grade: Grade::identity() })
}

fn rule_absurd(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: &[Judgement]) -> Result<Judgement, RuleError> {
    arity(rule, "0", premises, premises.is_empty())?;
    let (c1, c2) = leaf_cmds(ctx, rule, params)?;
    let pre = required(rule, "pre", checked_assertion(ctx, rule, "pre", params).map_err(|_| ParamError::Missing("pre".into())))?;
    ctx.require(rule, "precondition is unsatisfiable", &pre, &Assertion::False)?;
    let post = checked_assertion(ctx, rule, "post", params)?.unwrap_or(Assertion::False);
    Ok(Judgement { left: c1, right: c2, pre, post, grade: Grade::identity() })
}

type SamplePair<'c> = ((&'c str, &'c DistExpr), (&'c str, &'c DistExpr));

fn samples<'c>(rule: &str, c1: &'c Cmd, c2: &'c Cmd) -> Result<SamplePair<'c>, RuleError> {
    match (c1, c2) {
        (Cmd::Sample { var: x1, dist: d1, .. }, Cmd::Sample { var: x2, dist: d2, .. }) => {
            if d1.name != d2.name {
                return Err(shape(rule, format!("both sides must sample the same distribution, found `{}` and `{}`", d1.name, d2.name)));
            }
            Ok(((x1, d1), (x2, d2)))
        }
        _ => Err(shape(rule, "expected a random sampling on each side")),
    }
}

fn leaf_pre(ctx: &RuleCtx, rule: &str, params: &Params) -> Result<Assertion, RuleError> {
    checked_assertion(ctx, rule, "pre", params)?
        .ok_or_else(|| RuleError::Param { rule: rule.into(), error: "missing parameter `pre`".into() })
}

/// `x1<1> op x2<2> ∧ Ψ′` with Ψ′ the precondition without the sampled variables.
fn sampled_post(pre: &Assertion, x1: &str, x2: &str, relation: Assertion) -> Assertion {
    Assertion::and([relation, pre.erase(&[(x1, Side::Left), (x2, Side::Right)])])
}

/// Equal parameters on both sides: ground ones are compared by value, the
/// rest become side conditions.
fn equal_params(ctx: &mut RuleCtx, rule: &str, pre: &Assertion, es1: &[Expr], es2: &[Expr], what: &str) -> Result<(), RuleError> {
    for (a, b) in es1.iter().zip(es2) {
        let (ta, tb) = (tag(ctx.env, a, Side::Left), tag(ctx.env, b, Side::Right));
        let goal = bool_eq(ta, tb);
        if a == b && a.free_vars().iter().all(|v| ctx.env.is_global(v)) {
            continue;
        }
        ctx.require(rule, &format!("equal {what} {} / {}", print_expr(a), print_expr(b)), pre, &goal)?;
    }
    Ok(())
}

fn rule_rand(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: &[Judgement]) -> Result<Judgement, RuleError> {
    arity(rule, "0", premises, premises.is_empty())?;
    let (c1, c2) = leaf_cmds(ctx, rule, params)?;
    let ((x1, d1), (x2, d2)) = samples(rule, &c1, &c2)?;
    let kind = ctx.machine.table.dist(&d1.name).map(|s| s.kind);
    if kind != Some(DistKind::Discrete) {
        return Err(shape(rule, format!("`{}` is not a discrete distribution; use its mechanism rule", d1.name)));
    }
    let pre = leaf_pre(ctx, rule, params)?;
    equal_params(ctx, rule, &pre, &d1.params, &d2.params, "parameters")?;
    equal_params(ctx, rule, &pre, &d1.args, &d2.args, "arguments")?;
    let post = sampled_post(&pre, x1, x2, bool_eq(Expr::side_var(x1, Side::Left), Expr::side_var(x2, Side::Right)));
    Ok(Judgement { left: c1.clone(), right: c2.clone(), pre, post, grade: Grade::identity() })
}

fn ground_rational(ctx: &RuleCtx, rule: &str, e: &Expr) -> Result<Rational, RuleError> {
    if !e.free_vars().iter().all(|v| ctx.env.is_global(v)) {
        return Err(shape(rule, format!("parameter `{}` must only use constants", print_expr(e))));
    }
    ctx.machine
        .eval(e, &crate::value::Memory::new())
        .ok()
        .and_then(|v| v.as_rational())
        .ok_or_else(|| shape(rule, format!("parameter `{}` is not an exact number", print_expr(e))))
}

fn rule_rr(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: &[Judgement]) -> Result<Judgement, RuleError> {
    arity(rule, "0", premises, premises.is_empty())?;
    let (c1, c2) = leaf_cmds(ctx, rule, params)?;
    let ((x1, d1), (x2, d2)) = samples(rule, &c1, &c2)?;
    if d1.name != "rr" {
        return Err(shape(rule, "expected randomized response `rr(p)(b)`"));
    }
    let (p1, p2) = (ground_rational(ctx, rule, &d1.params[0])?, ground_rational(ctx, rule, &d2.params[0])?);
    if p1 != p2 || p1 <= Rational::zero() || p1 >= Rational::one() {
        return Err(shape(rule, "both sides need the same probability strictly between 0 and 1"));
    }
    let q = Rational::one() - &p1;
    let gamma = (&p1 / &q).max(&q / &p1);
    let pre = leaf_pre(ctx, rule, params)?;
    let post = sampled_post(&pre, x1, x2, bool_eq(Expr::side_var(x1, Side::Left), Expr::side_var(x2, Side::Right)));
    let grade = Grade::from_rationals(gamma, Rational::zero()).expect("ratio at least one");
    Ok(Judgement { left: c1.clone(), right: c2.clone(), pre, post, grade })
}

fn rule_mechanism(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: &[Judgement]) -> Result<Judgement, RuleError> {
    arity(rule, "0", premises, premises.is_empty())?;
    let (c1, c2) = leaf_cmds(ctx, rule, params)?;
    let ((x1, d1), (x2, d2)) = samples(rule, &c1, &c2)?;
    let family = match rule {
        "lap" | "lapgen" | "lapnull" => "lap",
        other => other,
    };
    if d1.name != family {
        return Err(shape(rule, format!("expected `{family}` samplings, found `{}`", d1.name)));
    }
    let (s1, s2) = (ground_rational(ctx, rule, &d1.params[0])?, ground_rational(ctx, rule, &d2.params[0])?);
    if s1 != s2 {
        return Err(shape(rule, format!("scales differ: {} and {}", format_rational(&s1), format_rational(&s2))));
    }
    if s1 <= Rational::zero() {
        return Err(shape(rule, "scale must be positive"));
    }
    let pre = leaf_pre(ctx, rule, params)?;
    let (e1, e2) = (tag(ctx.env, &d1.args[0], Side::Left), tag(ctx.env, &d2.args[0], Side::Right));
    let (v1, v2) = (Expr::side_var(x1, Side::Left), Expr::side_var(x2, Side::Right));

    if rule == "lapnull" {
        if d1.args[0].free_vars().contains(x1) || d2.args[0].free_vars().contains(x2) {
            return Err(shape(rule, "the centre must not mention the sampled variable"));
        }
        let rel = bool_eq(Expr::bin("-", v1, v2), Expr::bin("-", e1, e2));
        let post = sampled_post(&pre, x1, x2, rel);
        return Ok(Judgement { left: c1.clone(), right: c2.clone(), pre, post, grade: Grade::identity() });
    }

    let r = required(rule, "r", params.number("r"))?;
    let shift = param(rule, params.number("shift"))?.unwrap_or_else(Rational::zero);
    if shift != Rational::zero() && family != "lap" {
        return Err(RuleError::Param { rule: rule.into(), error: "`shift` is only available for Laplace".into() });
    }
    // |e1<1> + shift − e2<2>| ≤ r
    let diff = Expr::bin("-", Expr::bin("+", e1, lit(&shift)), e2);
    let bound = Assertion::and([
        Assertion::Atom(Expr::bin("<=", diff.clone(), lit(&r))),
        Assertion::Atom(Expr::bin("<=", Expr::op("neg", vec![diff]), lit(&r))),
    ]);
    ctx.require(rule, "centres within the radius", &pre, &bound)?;

    let kind = match family {
        "lap" => NamedKind::Lap { sigma: s1.clone() },
        "cauchy" => NamedKind::Cauchy { rho: s1.clone() },
        _ => {
            let delta = required(rule, "delta", params.number("delta"))?;
            let gamma = match param(rule, params.number("eps"))? {
                Some(eps) => ExpNum::exp(eps),
                None => required(rule, "eps", Ok(params.0.get("gamma").and_then(|v| v.as_exp())))?,
            };
            let variant = match param(rule, params.string("variant"))?.as_deref() {
                None | Some("main") => GaussVariant::Main,
                Some("relaxed") => GaussVariant::Relaxed,
                Some(v) => return Err(RuleError::Param { rule: rule.into(), error: format!("unknown variant `{v}`") }),
            };
            NamedKind::Gauss { sigma: s1.clone(), gamma, delta, variant }
        }
    };
    let cert = ctx.certificate(rule, &kind, &r)?;
    let rel = if shift.is_zero() {
        bool_eq(v1, v2)
    } else {
        bool_eq(Expr::bin("+", v1, lit(&shift)), v2)
    };
    let post = sampled_post(&pre, x1, x2, rel);
    Ok(Judgement { left: c1.clone(), right: c2.clone(), pre, post, grade: cert.grade_exact.clone() })
}

fn rule_seq(ctx: &mut RuleCtx, rule: &str, _params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    arity(rule, "at least 1", &premises, !premises.is_empty())?;
    let mut it = premises.into_iter();
    let first = it.next().expect("non-empty");
    let (mut lefts, mut rights) = (vec![first.left], vec![first.right]);
    let (pre, mut post, mut grade) = (first.pre, first.post, first.grade);
    for j in it {
        if post != j.pre {
            ctx.require(rule, "intermediate assertion", &post, &j.pre)?;
        }
        grade = ctx.seq_grade(&grade, &j.grade);
        post = j.post;
        lefts.push(j.left);
        rights.push(j.right);
    }
    Ok(Judgement { left: Cmd::seq_all(lefts), right: Cmd::seq_all(rights), pre, post, grade })
}

/// Common postcondition of branch premises: identical, or the node's `post`.
fn joint_post(ctx: &mut RuleCtx, rule: &str, params: &Params, posts: &[&Assertion]) -> Result<Assertion, RuleError> {
    if posts.windows(2).all(|w| w[0] == w[1]) {
        return Ok(posts[0].clone());
    }
    let post = checked_assertion(ctx, rule, "post", params)?
        .ok_or_else(|| RuleError::PremiseMismatch { rule: rule.into(), message: "postconditions differ and no `post` is given".into() })?;
    for p in posts {
        if **p != post {
            ctx.require(rule, "branch postcondition", p, &post)?;
        }
    }
    Ok(post)
}

fn branch_pre(ctx: &RuleCtx, rule: &str, params: &Params) -> Result<Assertion, RuleError> {
    checked_assertion(ctx, rule, "pre", params)?
        .ok_or_else(|| RuleError::Param { rule: rule.into(), error: "missing parameter `pre`".into() })
}

fn rule_cond(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    arity(rule, "2", &premises, premises.len() == 2)?;
    let (b1, b2) = guards(ctx, rule, params)?;
    let psi = branch_pre(ctx, rule, params)?;
    let (t1, t2) = (tag(ctx.env, &b1, Side::Left), tag(ctx.env, &b2, Side::Right));
    ctx.require(rule, "guards agree", &psi, &bool_eq(t1.clone(), t2))?;
    let (jt, je) = (&premises[0], &premises[1]);
    let g = Assertion::Atom(t1);
    ctx.require(rule, "then-branch precondition", &Assertion::and([psi.clone(), g.clone()]), &jt.pre)?;
    ctx.require(rule, "else-branch precondition", &Assertion::and([psi.clone(), Assertion::not(g)]), &je.pre)?;
    if jt.grade != je.grade {
        return Err(RuleError::PremiseMismatch {
            rule: rule.into(),
            message: format!("branch grades {} and {} differ; weaken one of them", jt.grade, je.grade),
        });
    }
    let post = joint_post(ctx, rule, params, &[&jt.post, &je.post])?;
    Ok(Judgement {
        left: Cmd::if_(b1, jt.left.clone(), je.left.clone()),
        right: Cmd::if_(b2, jt.right.clone(), je.right.clone()),
        pre: psi,
        post,
        grade: jt.grade.clone(),
    })
}

/// Conditional on one side only; the other side's command is shared by both premises.
fn rule_cond_one(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    arity(rule, "2", &premises, premises.len() == 2)?;
    let left = rule == "cond_l";
    let side = if left { Side::Left } else { Side::Right };
    let b = one_guard(ctx, rule, params, if left { "lguard" } else { "rguard" })?;
    let psi = branch_pre(ctx, rule, params)?;
    let (jt, je) = (&premises[0], &premises[1]);
    let (other_t, other_e) = if left { (&jt.right, &je.right) } else { (&jt.left, &je.left) };
    if !same_cmd(other_t, other_e) {
        return Err(RuleError::PremiseMismatch { rule: rule.into(), message: "the other side differs between the premises".into() });
    }
    let g = Assertion::Atom(tag(ctx.env, &b, side));
    ctx.require(rule, "then-branch precondition", &Assertion::and([psi.clone(), g.clone()]), &jt.pre)?;
    ctx.require(rule, "else-branch precondition", &Assertion::and([psi.clone(), Assertion::not(g)]), &je.pre)?;
    let post = joint_post(ctx, rule, params, &[&jt.post, &je.post])?;
    let grade = grade_join(&jt.grade, &je.grade);
    let (l, r) = if left {
        (Cmd::if_(b, jt.left.clone(), je.left.clone()), jt.right.clone())
    } else {
        (jt.left.clone(), Cmd::if_(b, jt.right.clone(), je.right.clone()))
    };
    Ok(Judgement { left: l, right: r, pre: psi, post, grade })
}

fn rule_while(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    let (b1, b2) = guards(ctx, rule, params)?;
    let variant = required(rule, "variant", checked_expr(ctx, rule, "variant", params).map_err(|_| ParamError::Missing("variant".into())))?;
    if !matches!(ctx.env.infer(&variant, false), Ok(Ty::Int)) {
        return Err(RuleError::Param { rule: rule.into(), error: "the variant must be an int expression".into() });
    }
    let n = required(rule, "bound", params.integer("bound"))?;
    if n < 0 {
        return Err(RuleError::Param { rule: rule.into(), error: "the bound must be nonnegative".into() });
    }
    let theta = checked_assertion(ctx, rule, "invariant", params)?
        .ok_or_else(|| RuleError::Param { rule: rule.into(), error: "missing parameter `invariant`".into() })?;
    arity(rule, n.to_string(), &premises, premises.len() as i64 == n)?;
    if premises.is_empty() {
        return Err(RuleError::Param { rule: rule.into(), error: "a loop needs at least one iteration premise".into() });
    }
    let listed = iteration_grades(rule, params, premises.len())?;
    let (body1, body2) = (premises[0].left.clone(), premises[0].right.clone());
    let e1 = tag(ctx.env, &variant, Side::Left);
    let nl = Expr::int(n);
    let mut grade = Grade::identity();
    for (k, j) in premises.iter().enumerate() {
        if !same_cmd(&j.left, &body1) || !same_cmd(&j.right, &body2) {
            return Err(RuleError::PremiseMismatch { rule: rule.into(), message: format!("premise {k} proves a different loop body") });
        }
        let kl = Expr::int(k as i64);
        let pre_k = Assertion::and([
            theta.clone(),
            bool_eq(e1.clone(), kl.clone()),
            Assertion::Atom(Expr::bin("<=", e1.clone(), nl.clone())),
        ]);
        if pre_k != j.pre {
            ctx.require(rule, &format!("iteration {k} precondition"), &pre_k, &j.pre)?;
        }
        let post_k = Assertion::and([theta.clone(), Assertion::Atom(Expr::bin(">", e1.clone(), kl))]);
        if post_k != j.post {
            ctx.require(rule, &format!("iteration {k} postcondition"), &j.post, &post_k)?;
        }
        let g_k = match &listed {
            Some(gs) => {
                if !j.grade.leq(&gs[k]) {
                    return Err(RuleError::GradeMismatch { claimed: gs[k].to_string(), computed: j.grade.to_string() });
                }
                gs[k].clone()
            }
            None => j.grade.clone(),
        };
        grade = ctx.seq_grade(&grade, &g_k);
    }
    let (g1, g2) = (tag(ctx.env, &b1, Side::Left), tag(ctx.env, &b2, Side::Right));
    ctx.require(rule, "guards agree", &theta, &bool_eq(g1.clone(), g2))?;
    let exhausted = Assertion::and([theta.clone(), Assertion::Atom(Expr::bin(">=", e1.clone(), nl))]);
    ctx.require(rule, "variant bound ends the loop", &exhausted, &Assertion::not(Assertion::Atom(g1.clone())))?;
    let pre = Assertion::and([theta.clone(), Assertion::Atom(g1.clone()), Assertion::Atom(Expr::bin(">=", e1, Expr::int(0)))]);
    let post = Assertion::and([theta, Assertion::not(Assertion::Atom(g1))]);
    Ok(Judgement { left: Cmd::while_(b1, body1), right: Cmd::while_(b2, body2), pre, post, grade })
}

/// The optional `grades` list of `[while]`: one grade per iteration, or `uniform(γ, δ)`.
fn iteration_grades(rule: &str, params: &Params, n: usize) -> Result<Option<Vec<Grade>>, RuleError> {
    let bad = |m: String| RuleError::Param { rule: rule.into(), error: format!("parameter `grades`: {m}") };
    let Some(v) = params.0.get("grades") else { return Ok(None) };
    let SValue::Tuple(items) = v else { return Err(bad("expected a list of grades".into())) };
    if let [SValue::Str(tag), g] = items.as_slice() {
        if tag == "uniform" {
            let g = value_to_grade(g).map_err(bad)?;
            return Ok(Some(vec![g; n]));
        }
    }
    if items.len() != n {
        return Err(bad(format!("{} grade(s) for {n} iteration(s)", items.len())));
    }
    items.iter().map(|g| value_to_grade(g).map_err(bad)).collect::<Result<Vec<_>, _>>().map(Some)
}

fn rule_case(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    arity(rule, "2", &premises, premises.len() == 2)?;
    let theta = checked_assertion(ctx, rule, "theta", params)?
        .ok_or_else(|| RuleError::Param { rule: rule.into(), error: "missing parameter `theta`".into() })?;
    let psi = branch_pre(ctx, rule, params)?;
    let (j1, j2) = (&premises[0], &premises[1]);
    if !same_cmd(&j1.left, &j2.left) || !same_cmd(&j1.right, &j2.right) {
        return Err(RuleError::PremiseMismatch { rule: rule.into(), message: "both cases must prove the same commands".into() });
    }
    if j1.grade != j2.grade {
        return Err(RuleError::PremiseMismatch { rule: rule.into(), message: format!("case grades {} and {} differ", j1.grade, j2.grade) });
    }
    ctx.require(rule, "first case precondition", &Assertion::and([psi.clone(), theta.clone()]), &j1.pre)?;
    ctx.require(rule, "second case precondition", &Assertion::and([psi.clone(), Assertion::not(theta)]), &j2.pre)?;
    let post = joint_post(ctx, rule, params, &[&j1.post, &j2.post])?;
    Ok(Judgement { left: j1.left.clone(), right: j1.right.clone(), pre: psi, post, grade: j1.grade.clone() })
}

/// Only variables of discrete type, or a conjunction of `e<1> = e<2>`.
pub fn admits_composition(env: &TypeEnv, a: &Assertion) -> bool {
    let discrete = a.vars().iter().all(|(v, _)| matches!(env.var_type(v), Some(Ty::Bool | Ty::Int)));
    discrete || eq_shape(a).is_some()
}

/// The untagged expressions of an Eq-shaped assertion.
fn eq_shape(a: &Assertion) -> Option<Vec<Expr>> {
    let strip = |e: &Expr| e.map_vars(&mut |n, _, span| Expr::Var { name: n.to_string(), side: None, span });
    let mut out = Vec::new();
    for c in a.conjuncts() {
        match c {
            Assertion::Atom(Expr::Op { op, args, .. }) if op == "=" && args.len() == 2 => {
                let (l, r) = (&args[0], &args[1]);
                let only = |e: &Expr, s: Side| {
                    let mut ok = true;
                    e.visit_vars(&mut |_, side| ok &= side == Some(s) || side.is_none());
                    ok
                };
                if strip(l) != strip(r) || !only(l, Side::Left) || !only(r, Side::Right) {
                    return None;
                }
                out.push(strip(l));
            }
            _ => return None,
        }
    }
    Some(out)
}

fn rename_side(a: &Assertion, from: Side, to: Side) -> Assertion {
    match a {
        Assertion::Atom(e) => Assertion::Atom(e.map_vars(&mut |n, s, span| {
            let s = if s == Some(from) { Some(to) } else { s };
            Expr::Var { name: n.to_string(), side: s, span }
        })),
        Assertion::Not(x) => Assertion::Not(Box::new(rename_side(x, from, to))),
        Assertion::And(ps) => Assertion::And(ps.iter().map(|p| rename_side(p, from, to)).collect()),
        Assertion::Or(ps) => Assertion::Or(ps.iter().map(|p| rename_side(p, from, to)).collect()),
        Assertion::Implies(x, y) => Assertion::Implies(Box::new(rename_side(x, from, to)), Box::new(rename_side(y, from, to))),
        other => other.clone(),
    }
}

const MID: &str = "__mid";

/// Moves the `side` variables of `a` to fresh `v__mid<1>` copies.
fn to_mid(a: &Assertion, side: Side) -> Assertion {
    match a {
        Assertion::Atom(e) => Assertion::Atom(e.map_vars(&mut |n, s, span| {
            if s == Some(side) {
                Expr::Var { name: format!("{n}{MID}"), side: Some(Side::Left), span }
            } else {
                Expr::Var { name: n.to_string(), side: s, span }
            }
        })),
        Assertion::Not(x) => Assertion::Not(Box::new(to_mid(x, side))),
        Assertion::And(ps) => Assertion::And(ps.iter().map(|p| to_mid(p, side)).collect()),
        Assertion::Or(ps) => Assertion::Or(ps.iter().map(|p| to_mid(p, side)).collect()),
        Assertion::Implies(x, y) => Assertion::Implies(Box::new(to_mid(x, side)), Box::new(to_mid(y, side))),
        other => other.clone(),
    }
}

fn rule_comp(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    arity(rule, "2", &premises, premises.len() == 2)?;
    let (j1, j2) = (&premises[0], &premises[1]);
    if !same_cmd(&j1.right, &j2.left) {
        return Err(RuleError::PremiseMismatch { rule: rule.into(), message: "the middle programs differ".into() });
    }
    if rule == "comp_endo" {
        if !same_cmd(&j1.left, &j1.right) || !same_cmd(&j2.left, &j2.right) {
            return Err(RuleError::PremiseMismatch { rule: rule.into(), message: "all three programs must coincide".into() });
        }
        let eq_all = Assertion::and(ctx.env.ctx.iter().map(|(v, _)| {
            bool_eq(Expr::side_var(v, Side::Left), Expr::side_var(v, Side::Right))
        }));
        ctx.require(rule, "first postcondition is reflexive", &eq_all, &j1.post)?;
        ctx.require(rule, "second postcondition is reflexive", &eq_all, &j2.post)?;
    } else {
        for p in [&j1.post, &j2.post] {
            if !admits_composition(ctx.env, p) {
                return Err(RuleError::MeasurabilityRestriction { rule: rule.into(), assertion: p.to_string() });
            }
        }
    }
    // extended context with a copy of every variable for the middle memory
    let mut env = ctx.env.clone();
    for (v, t) in ctx.env.ctx.iter().cloned().collect::<Vec<_>>() {
        env.ctx.declare(&format!("{v}{MID}"), t);
    }

    // ∃m2. Ψ(m1,m2) ∧ Ψ′(m2,m3), witnessed by m2 = m1 or m2 = m3
    let witnesses = [
        Assertion::and([rename_side(&j1.pre, Side::Right, Side::Left), j2.pre.clone()]),
        Assertion::and([j1.pre.clone(), rename_side(&j2.pre, Side::Left, Side::Right)]),
    ];
    let pre = checked_assertion(ctx, rule, "pre", params)?.unwrap_or_else(|| witnesses[0].clone());
    let first = ctx.verdict_in(ctx.env, &pre, &witnesses[0]);
    if ctx.policy.accepts(&first) {
        ctx.record(rule, "composed precondition (middle = left)", &pre, &witnesses[0], first)?;
    } else {
        let second = ctx.verdict_in(ctx.env, &pre, &witnesses[1]);
        ctx.record(rule, "composed precondition (middle = right)", &pre, &witnesses[1], second)?;
    }

    let composed = Assertion::and([to_mid(&j1.post, Side::Right), to_mid(&j2.post, Side::Left)]);
    let post = match checked_assertion(ctx, rule, "post", params)? {
        Some(p) => p,
        None => match (eq_shape(&j1.post), eq_shape(&j2.post)) {
            (Some(a), Some(b)) => Assertion::and(
                a.iter()
                    .filter(|e| b.contains(e))
                    .map(|e| bool_eq(tag(ctx.env, e, Side::Left), tag(ctx.env, e, Side::Right))),
            ),
            _ => return Err(RuleError::Param { rule: rule.into(), error: "missing parameter `post` for the composed relation".into() }),
        },
    };
    let v = ctx.verdict_in(&env, &composed, &post);
    ctx.record(rule, "composed postcondition", &composed, &post, v)?;
    let grade = ctx.comp_grade(&j1.grade, &j2.grade);
    Ok(Judgement { left: j1.left.clone(), right: j2.right.clone(), pre, post, grade })
}

fn rule_frame(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    arity(rule, "1", &premises, premises.len() == 1)?;
    let j = premises.into_iter().next().expect("one premise");
    let theta = checked_assertion(ctx, rule, "theta", params)?
        .ok_or_else(|| RuleError::Param { rule: rule.into(), error: "missing parameter `theta`".into() })?;
    let (w1, w2) = (j.left.written_vars(), j.right.written_vars());
    let clash: BTreeSet<String> = theta
        .vars()
        .into_iter()
        .filter(|(v, s)| match s {
            Side::Left => w1.contains(v),
            Side::Right => w2.contains(v),
        })
        .map(|(v, _)| v)
        .collect();
    let condition = "frame is untouched by the commands";
    if clash.is_empty() {
        ctx.record(rule, condition, &theta, &theta, Verdict::Verified { method: super::entail::Method::Syntactic })?;
    } else {
        match ctx.discharger.frame(ctx.env, ctx.machine, &theta, &j.left, &j.right) {
            Some(v) => ctx.record(rule, condition, &theta, &theta, v)?,
            None => return Err(RuleError::FrameVariablesWritten { rule: rule.into(), vars: clash.into_iter().collect() }),
        }
    }
    Ok(Judgement {
        pre: Assertion::and([j.pre, theta.clone()]),
        post: Assertion::and([j.post, theta]),
        ..j
    })
}

fn rule_forall_eq(ctx: &mut RuleCtx, rule: &str, params: &Params, premises: Vec<Judgement>) -> Result<Judgement, RuleError> {
    let var = required(rule, "var", params.string("var"))?;
    if !matches!(ctx.env.var_type(&var), Some(Ty::Int | Ty::Bool)) {
        return Err(RuleError::Param { rule: rule.into(), error: format!("`{var}` must be a discrete program variable") });
    }
    let lo = required(rule, "lo", params.integer("lo"))?;
    let hi = required(rule, "hi", params.integer("hi"))?;
    let count = (hi - lo + 1).max(0) as usize;
    arity(rule, count.to_string(), &premises, premises.len() == count && count > 0)?;
    let (c1, c2) = (premises[0].left.clone(), premises[0].right.clone());
    if !same_cmd(&c1, &c2) {
        return Err(shape(rule, "both sides must run the same program"));
    }
    let pre = checked_assertion(ctx, rule, "pre", params)?.unwrap_or_else(|| premises[0].pre.clone());
    ctx.require(rule, "symmetric precondition", &pre, &pre.opposite())?;
    let (x1, x2) = (Expr::side_var(&var, Side::Left), Expr::side_var(&var, Side::Right));
    let range = Assertion::and([
        Assertion::Atom(Expr::bin("<=", Expr::int(lo), x1.clone())),
        Assertion::Atom(Expr::bin("<=", x1.clone(), Expr::int(hi))),
    ]);
    let mut gamma = ExpNum::one();
    let mut delta = ExpNum::zero();
    for (k, j) in premises.iter().enumerate() {
        let i = lo + k as i64;
        if !same_cmd(&j.left, &c1) || !same_cmd(&j.right, &c2) {
            return Err(RuleError::PremiseMismatch { rule: rule.into(), message: format!("premise for {var} = {i} proves other commands") });
        }
        if j.pre != pre {
            ctx.require(rule, &format!("precondition for {var} = {i}"), &pre, &j.pre)?;
        }
        let goal = Assertion::and([
            Assertion::implies(bool_eq(x1.clone(), Expr::int(i)), bool_eq(x2.clone(), Expr::int(i))),
            range.clone(),
        ]);
        ctx.require(rule, &format!("postcondition for {var} = {i}"), &j.post, &goal)?;
        gamma = gamma.max(j.grade.gamma().clone());
        delta = &delta + j.grade.delta();
    }
    let grade = Grade::new(gamma, delta).expect("combination of valid grades");
    Ok(Judgement { left: c1, right: c2, pre, post: bool_eq(x1, x2), grade })
}

#[cfg(test)]
mod tests {
    use super::super::params::SValue;
    use super::*;
    use crate::num::rational::ratio;
    use crate::syntax::{parse, OpTable};

    fn setup(src: &str) -> (Machine, TypeEnv) {
        let p = parse(src).unwrap();
        Machine::for_program(&p, &OpTable::default(), &BTreeMap::new()).unwrap()
    }

    fn ps(items: &[(&str, SValue)]) -> Params {
        Params(items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
    }

    fn s(x: &str) -> SValue {
        SValue::Str(x.into())
    }

    fn lap_leaf(ctx: &mut RuleCtx) -> Judgement {
        let p = ps(&[
            ("cmd", s("x <$ lap(2.0)(a)")),
            ("pre", s("a<1> = a<2>")),
            ("r", SValue::Num(ratio(1, 1))),
        ]);
        apply_rule(ctx, "lap", &p, vec![]).unwrap()
    }

    const SRC: &str = "var a: real; var x: real; var y: real; var b: bool;\n skip";

    #[test]
    fn seq_multiplies_grades() {
        let (m, env) = setup(SRC);
        let d = EntailDischarger::default();
        let mut ctx = RuleCtx::new(&env, &m, &d, Policy::Standard);
        let j1 = lap_leaf(&mut ctx);
        assert_eq!(j1.grade, Grade::new(ExpNum::exp(ratio(1, 2)), ExpNum::zero()).unwrap());
        let j2 = lap_leaf(&mut ctx);
        let j = apply_rule(&mut ctx, "seq", &Params::default(), vec![j1, j2]).unwrap();
        assert_eq!(j.grade, Grade::new(ExpNum::exp(ratio(1, 1)), ExpNum::zero()).unwrap());
        assert_eq!(ctx.certificates.len(), 1);
    }

    #[test]
    fn skip_axiom_and_grade_claims() {
        let (m, env) = setup(SRC);
        let d = EntailDischarger::default();
        let mut ctx = RuleCtx::new(&env, &m, &d, Policy::Standard);
        let j = apply_rule(&mut ctx, "skip", &ps(&[("pre", s("b<1> = b<2>"))]), vec![]).unwrap();
        assert_eq!(j.pre, j.post);
        assert_eq!(j.grade, Grade::identity());

        let up = SValue::Tuple(vec![SValue::Exp(ExpNum::exp(ratio(1, 1))), SValue::Num(ratio(0, 1))]);
        let j = apply_rule(&mut ctx, "weak", &ps(&[("grade", up)]), vec![j]).unwrap();
        let down = SValue::Tuple(vec![SValue::Num(ratio(1, 1)), SValue::Num(ratio(0, 1))]);
        let err = apply_rule(&mut ctx, "weak", &ps(&[("grade", down)]), vec![j]).unwrap_err();
        assert!(matches!(err, RuleError::GradeMismatch { .. }));
    }

    #[test]
    fn op_is_an_involution() {
        let (m, env) = setup(SRC);
        let d = EntailDischarger::default();
        let mut ctx = RuleCtx::new(&env, &m, &d, Policy::Standard);
        let p = ps(&[("left", s("x <- a + 1.0")), ("post", s("x<1> = a<2> + 1.0"))]);
        let j = apply_rule(&mut ctx, "assn", &p, vec![]).unwrap();
        assert_eq!(j.pre.to_string(), "a<1> + 1.0 = a<2> + 1.0");
        let back = apply_rule(&mut ctx, "op", &Params::default(), vec![j.clone()]).unwrap();
        assert_eq!(back.left, Cmd::Skip);
        let again = apply_rule(&mut ctx, "op", &Params::default(), vec![back]).unwrap();
        assert_eq!(again, j);
    }

    #[test]
    fn failed_side_condition_is_reported() {
        let (m, env) = setup(SRC);
        let d = EntailDischarger::default();
        let mut ctx = RuleCtx::new(&env, &m, &d, Policy::Standard);
        let p = ps(&[
            ("cmd", s("x <$ lap(2.0)(a)")),
            ("pre", s("a<1> <= a<2> + 3.0")),
            ("r", SValue::Num(ratio(1, 1))),
        ]);
        let err = apply_rule(&mut ctx, "lap", &p, vec![]).unwrap_err();
        assert!(matches!(err, RuleError::SideConditionFailed { .. }), "{err}");
    }

    #[test]
    fn corrupted_seq_is_larger() {
        let (m, env) = setup(SRC);
        let d = EntailDischarger::default();
        let mut ctx = RuleCtx::new(&env, &m, &d, Policy::Standard);
        ctx.mutation = Some(Mutation::SeqSum);
        let j1 = lap_leaf(&mut ctx);
        let j2 = lap_leaf(&mut ctx);
        let j = apply_rule(&mut ctx, "seq", &Params::default(), vec![j1, j2]).unwrap();
        assert_eq!(j.grade.gamma(), &(ExpNum::exp(ratio(1, 2)) + ExpNum::exp(ratio(1, 2))));
    }
}
