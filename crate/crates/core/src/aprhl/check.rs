//! Bottom-up checking of a proof script against its program.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::assertion::Assertion;
use super::entail::{Policy, Verdict};
use super::params::{Params, SValue};
use super::rules::{apply_rule, Discharger, EntailDischarger, Judgement, RuleCtx, RuleError, SideCondition};
use super::script::{eval_lets, eval_params, parse_script, record_fields, Env, Expander, Node, ScriptError};
use crate::grade::{Grade, GradeRecord};
use crate::mechanisms::Certificate;
use crate::semantics::Machine;
use crate::syntax::types::TypeEnv;
use crate::syntax::{parse, print_cmd_inline, Cmd, OpTable, Program, Ty};
use crate::value::Value;

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub policy: Policy,
    pub seed: u64,
    pub samples: usize,
    /// Values for the script's `param` declarations.
    pub overrides: BTreeMap<String, SValue>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { policy: Policy::Standard, seed: 0, samples: 10_000, overrides: BTreeMap::new() }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("script: {0}")]
    Script(#[from] ScriptError),
    #[error("program: {0}")]
    Program(String),
    #[error("{location}: {error}")]
    Rule { location: String, error: RuleError },
    #[error("goal not met: {0}")]
    Goal(String),
    #[error("{0}")]
    Shape(String),
}

impl CheckError {
    /// The rule error behind a failure, if any.
    pub fn rule_error(&self) -> Option<&RuleError> {
        match self {
            CheckError::Rule { error, .. } => Some(error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub location: String,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub script: String,
    pub program: String,
    pub params: BTreeMap<String, String>,
    pub policy: Policy,
    pub seed: u64,
    pub left: String,
    pub right: String,
    pub pre: String,
    pub post: String,
    pub grade: GradeRecord,
    pub goal: Option<GoalCheck>,
    pub side_conditions: Vec<SideCondition>,
    pub assumed: Vec<SideCondition>,
    pub certificates: Vec<CertificateEntry>,
    pub nodes: usize,
    #[serde(skip)]
    pub judgement: Judgement,
}

#[derive(Debug, Clone, Serialize)]
pub struct GoalCheck {
    pub pre: String,
    pub post: String,
    pub grade: GradeRecord,
}

impl Report {
    pub fn grade(&self) -> &Grade {
        &self.judgement.grade
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("script   {}\nprogram  {}\n", self.script, self.program));
        for (k, v) in &self.params {
            out.push_str(&format!("param    {k} = {v}\n"));
        }
        out.push_str(&format!("policy   {:?}, seed {}\n", self.policy, self.seed));
        out.push_str(&format!("nodes    {}\n", self.nodes));
        out.push_str(&format!("pre      {}\npost     {}\n", self.pre, self.post));
        out.push_str(&format!(
            "grade    (gamma, delta) = ({}, {})\n         (eps, delta)   = ({}, {})\n",
            self.grade.gamma, self.grade.delta, self.grade.eps, self.grade.delta
        ));
        if let Some(g) = &self.goal {
            out.push_str(&format!("goal     {} ==> {} at ({}, {})\n", g.pre, g.post, g.grade.gamma, g.grade.delta));
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for sc in &self.side_conditions {
            *counts.entry(verdict_kind(&sc.verdict)).or_default() += 1;
        }
        out.push_str(&format!("side conditions: {}", self.side_conditions.len()));
        for (k, n) in &counts {
            out.push_str(&format!(", {k} {n}"));
        }
        out.push('\n');
        for a in &self.assumed {
            out.push_str(&format!("  assumed at {} [{}] {}\n", a.location, a.rule, a.condition));
        }
        for c in &self.certificates {
            let cert = &c.certificate;
            out.push_str(&format!(
                "certificate {} at {}: grade ({}, {}) {:?}\n",
                cert.mechanism, c.location, cert.grade.gamma, cert.grade.delta, cert.status
            ));
        }
        out
    }
}

fn verdict_kind(v: &Verdict) -> String {
    match v {
        Verdict::Verified { .. } => "verified".into(),
        Verdict::Tested { exhaustive: true, .. } => "tested-exhaustive".into(),
        Verdict::Tested { .. } => "tested".into(),
        Verdict::Refuted { .. } => "refuted".into(),
        Verdict::Assumed => "assumed".into(),
    }
}

fn to_value(v: &SValue, ty: &Ty) -> Option<Value> {
    match (v, ty) {
        (SValue::Bool(b), Ty::Bool) => Some(Value::Bool(*b)),
        (SValue::Num(q), Ty::Int) if q.is_integer() => Some(Value::Int(q.to_integer())),
        (SValue::Num(q), Ty::Real) => Some(Value::Real(q.clone())),
        _ => None,
    }
}

fn from_value(v: &Value) -> Option<SValue> {
    match v {
        Value::Bool(b) => Some(SValue::Bool(*b)),
        Value::Int(n) => Some(SValue::Num(n.clone().into())),
        Value::Real(q) => Some(SValue::Num(q.clone())),
        _ => None,
    }
}

/// Loads the program with the script parameters of the same name as overrides.
pub fn load_program(src: &str, env: &Env) -> Result<(Program, Machine, TypeEnv), CheckError> {
    let table = OpTable::default();
    let program = parse(src).map_err(|e| CheckError::Program(e.to_string()))?;
    let mut overrides = BTreeMap::new();
    for g in program.prelude.globals.iter().filter(|g| g.is_param) {
        if let Some(v) = env.get(&g.name) {
            let v = to_value(v, &g.ty).ok_or_else(|| {
                CheckError::Program(format!("script value {v} does not fit program parameter `{}: {}`", g.name, g.ty))
            })?;
            overrides.insert(g.name.clone(), v);
        }
    }
    let (machine, tenv) = Machine::for_program(&program, &table, &overrides).map_err(|e| CheckError::Program(e.to_string()))?;
    Ok((program, machine, tenv))
}

/// Checks a script file; the program path is resolved next to the script.
pub fn check_script(path: &Path, cfg: &CheckConfig) -> Result<Report, CheckError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| CheckError::Io { path: p.display().to_string(), message: e.to_string() })
    };
    let src = read(path)?;
    let ast = parse_script(&src)?;
    let rel = ast.program.as_ref().ok_or_else(|| CheckError::Shape("script names no `program`".into()))?;
    let program_path: PathBuf = path.parent().unwrap_or(Path::new(".")).join(&rel.0);
    let program_src = read(&program_path)?;
    check_source(&src, &program_src, &path.display().to_string(), &program_path.display().to_string(), cfg)
}

/// Checks script text against program text.
pub fn check_source(src: &str, program_src: &str, script_name: &str, program_name: &str, cfg: &CheckConfig) -> Result<Report, CheckError> {
    let d = EntailDischarger { seed: cfg.seed, samples: cfg.samples };
    check_with(src, program_src, script_name, program_name, cfg, &d, None)
}

pub(crate) fn check_with(
    src: &str,
    program_src: &str,
    script_name: &str,
    program_name: &str,
    cfg: &CheckConfig,
    discharger: &dyn Discharger,
    mutation: Option<super::rules::Mutation>,
) -> Result<Report, CheckError> {
    let ast = parse_script(src)?;
    let mut env = eval_params(&ast, &cfg.overrides)?;
    let params: BTreeMap<String, String> = env.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
    let (program, machine, tenv) = load_program(program_src, &env)?;
    for (name, v) in machine.globals.iter() {
        if let Some(v) = from_value(v) {
            env.entry(name.clone()).or_insert(v);
        }
    }
    eval_lets(&ast, &mut env)?;

    let mut goal = None;
    for r in &ast.records {
        let (name, fields, span) = record_fields(r, &env)?;
        match name.as_str() {
            "goal" if goal.is_none() => goal = Some((fields, span)),
            "goal" => return Err(CheckError::Shape(format!("{span}: duplicate goal"))),
            other => return Err(CheckError::Shape(format!("{span}: unknown record `{other}`"))),
        }
    }
    let proof = ast.proof.as_ref().ok_or_else(|| CheckError::Shape("script has no `proof`".into()))?;
    let roots = Expander::new(&ast.defs).expand(proof, &env)?;
    let [root] = roots.as_slice() else {
        return Err(CheckError::Shape(format!("`proof` must expand to exactly one node, found {}", roots.len())));
    };

    let mut ctx = RuleCtx::new(&tenv, &machine, discharger, cfg.policy);
    ctx.mutation = mutation;
    let j = check_node(&mut ctx, root)?;

    if !same_program(&j.left, &program.body) || !same_program(&j.right, &program.body) {
        return Err(CheckError::Shape(format!(
            "the proof is about `{}` ~ `{}`, not the program `{}`",
            print_cmd_inline(&j.left),
            print_cmd_inline(&j.right),
            print_cmd_inline(&program.body)
        )));
    }

    let goal_check = match goal {
        None => None,
        Some((fields, span)) => Some(check_goal(&mut ctx, &fields, &j).map_err(|e| match e {
            CheckError::Rule { error, .. } => CheckError::Rule { location: format!("{span} goal"), error },
            e => e,
        })?),
    };

    let assumed = ctx.log.iter().filter(|s| s.verdict == Verdict::Assumed).cloned().collect();
    let certificates = ctx
        .certificates
        .iter()
        .map(|(l, c)| CertificateEntry { location: l.clone(), certificate: c.clone() })
        .collect();
    Ok(Report {
        script: script_name.to_string(),
        program: program_name.to_string(),
        params,
        policy: cfg.policy,
        seed: cfg.seed,
        left: print_cmd_inline(&j.left),
        right: print_cmd_inline(&j.right),
        pre: j.pre.to_string(),
        post: j.post.to_string(),
        grade: j.grade.to_record(),
        goal: goal_check,
        side_conditions: ctx.log.clone(),
        assumed,
        certificates,
        nodes: root.size(),
        judgement: j,
    })
}

fn same_program(a: &Cmd, b: &Cmd) -> bool {
    a == b || a.equiv_modulo_seq(b)
}

fn check_goal(ctx: &mut RuleCtx, fields: &Params, j: &Judgement) -> Result<GoalCheck, CheckError> {
    let rule = |e: RuleError| CheckError::Rule { location: "goal".into(), error: e };
    let field_err = |e: super::params::ParamError| CheckError::Shape(format!("goal: {e}"));
    let assertion = |key: &str| -> Result<Assertion, CheckError> {
        let a = fields.assertion(key).map_err(field_err)?.unwrap_or(Assertion::True);
        a.check(ctx.env).map_err(|m| CheckError::Shape(format!("goal `{key}`: {m}")))?;
        Ok(a)
    };
    let pre = assertion("pre")?;
    let post = assertion("post")?;
    ctx.location = "goal".into();
    ctx.assume = false;
    if pre != j.pre {
        ctx.require("goal", "goal precondition", &pre, &j.pre).map_err(rule)?;
    }
    if post != j.post {
        ctx.require("goal", "goal postcondition", &j.post, &post).map_err(rule)?;
    }
    let grade = match fields.grade("grade").map_err(field_err)? {
        Some(g) => {
            if !j.grade.leq(&g) {
                return Err(CheckError::Goal(format!("derived grade {} exceeds the goal {g}", j.grade)));
            }
            g
        }
        None => j.grade.clone(),
    };
    Ok(GoalCheck { pre: pre.to_string(), post: post.to_string(), grade: grade.to_record() })
}

fn check_node(ctx: &mut RuleCtx, n: &Node) -> Result<Judgement, CheckError> {
    let mut premises = Vec::with_capacity(n.children.len());
    for c in &n.children {
        premises.push(check_node(ctx, c)?);
    }
    let location = format!("{} {}", n.span, n.rule);
    ctx.location = location.clone();
    apply_rule(ctx, &n.rule, &n.params, premises).map_err(|error| CheckError::Rule { location, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grade::Grade;
    use crate::num::rational::ratio;
    use crate::num::ExpNum;

    const PROG: &str = "param eps: real = 1.0; var a: real; var x: real;\n x <$ lap(2.0 / eps)(a)";

    fn script(grade: &str) -> String {
        format!(
            r#"aprhl 1
program "p.pwhile"
param eps = 1
goal(pre: "a<1> = a<2>", post: "x<1> = x<2>", grade: {grade})
proof lap(cmd: "x <$ lap(2.0 / eps)(a)", pre: "a<1> = a<2>", r: 1)
"#
        )
    }

    #[test]
    fn single_mechanism_script() {
        let r = check_source(&script("(exp(eps / 2), 0)"), PROG, "s", "p", &CheckConfig::default()).unwrap();
        assert_eq!(r.judgement.grade, Grade::new(ExpNum::exp(ratio(1, 2)), ExpNum::zero()).unwrap());
        assert_eq!(r.certificates.len(), 1);
        let text = r.render();
        assert!(text.contains("(eps, delta)   = (0.5, 0)"), "{text}");
    }

    #[test]
    fn goal_below_derived_grade_fails() {
        let err = check_source(&script("(exp(eps / 4), 0)"), PROG, "s", "p", &CheckConfig::default()).unwrap_err();
        assert!(matches!(err, CheckError::Goal(_)), "{err}");
    }

    #[test]
    fn eps_override_reaches_program() {
        let cfg = CheckConfig {
            overrides: BTreeMap::from([("eps".to_string(), SValue::Num(ratio(2, 1)))]),
            ..Default::default()
        };
        let r = check_source(&script("(exp(eps / 2), 0)"), PROG, "s", "p", &cfg).unwrap();
        assert_eq!(r.judgement.grade.gamma(), &ExpNum::exp(ratio(1, 1)));
    }

    #[test]
    fn skip_script() {
        let s = "aprhl 1\nprogram \"p\"\nproof skip(pre: \"x<1> = x<2>\")\n";
        let r = check_source(s, "var x: int;\n skip", "s", "p", &CheckConfig::default()).unwrap();
        assert!(r.judgement.grade.is_identity());
    }
}
