//! Statistical (ε,δ) audit of a program on one pair of adjacent inputs.
//!
//! Both inputs are run on the same ChaCha streams, events are fixed from a
//! separate pilot sample, and every event is tested in both directions with
//! Clopper–Pearson intervals under a Bonferroni split of α. An audit can only
//! refute a claim; when nothing is refuted the verdict is `Consistent`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::aprhl::check::load_program;
use crate::aprhl::params::SValue;
use crate::aprhl::script::{eval_lets, eval_params, parse_records, record_fields, Env, ScriptError};
use crate::num::rational::{format_rational, to_f64};
use crate::num::Rational;
use crate::semantics::sample::{sample_once, trial_rng};
use crate::semantics::Machine;
use crate::syntax::types::{coerce, TypeEnv};
use crate::syntax::{Cmd, Ty};
use crate::value::{Memory, Value};

/// Streams at and above this index are reserved for the pilot sample.
const PILOT_STREAM: u64 = 1 << 40;
const PILOT_TRIALS: usize = 100_000;
/// Exhaustive event enumeration for discrete outputs up to this many values.
const SUBSET_VALUES: usize = 8;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("program: {0}")]
    Program(String),
    #[error("audit spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Events {
    /// Equal-probability bins of the pooled pilot sample, with their half-lines.
    Quantiles(usize),
    /// Explicit bin edges, with their half-lines.
    Edges(Vec<f64>),
}

pub struct AuditSpec {
    pub program: String,
    pub machine: Machine,
    pub body: Cmd,
    pub left: Memory,
    pub right: Memory,
    /// Declared L1 distance between the two inputs.
    pub bound: Rational,
    pub output: String,
    pub eps: Rational,
    pub delta: Rational,
    pub events: Events,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub fuel: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRow {
    pub event: String,
    pub k1: usize,
    pub k2: usize,
    pub p1: f64,
    pub p2: f64,
    pub ci1: (f64, f64),
    pub ci2: (f64, f64),
    /// `p1 − e^ε p2 − δ` with its interval.
    pub margin12: (f64, f64, f64),
    /// `p2 − e^ε p1 − δ` with its interval.
    pub margin21: (f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AuditVerdict {
    Consistent,
    Violation { event: String, direction: String, margin: f64, ci: (f64, f64) },
}

#[derive(Debug, Clone, Serialize)]
pub struct Worst {
    pub event: String,
    pub margin: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub version: String,
    pub program: String,
    pub output: String,
    pub left: String,
    pub right: String,
    pub eps: String,
    pub delta: String,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Confidence level of each one-sided bound after the Bonferroni split.
    pub alpha_per_bound: f64,
    pub exhausted: (usize, usize),
    pub events: Vec<EventRow>,
    pub worst12: Worst,
    pub worst21: Worst,
    pub verdict: AuditVerdict,
    /// Median interval half-width above 0.05: a `Consistent` verdict says little.
    pub wide_intervals: bool,
}

impl AuditReport {
    pub fn is_violation(&self) -> bool {
        matches!(self.verdict, AuditVerdict::Violation { .. })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "program  {}", self.program);
        let _ = writeln!(s, "inputs   {}  vs  {}", self.left, self.right);
        let _ = writeln!(s, "output   {}", self.output);
        let _ = writeln!(s, "claim    (eps, delta) = ({}, {})", self.eps, self.delta);
        let _ = writeln!(s, "trials   {} per input, seed {}, alpha {} ({:.3e} per bound)", self.trials, self.seed, self.alpha, self.alpha_per_bound);
        let _ = writeln!(s, "events   {}", self.events.len());
        if self.exhausted != (0, 0) {
            let _ = writeln!(s, "exhausted {} / {}", self.exhausted.0, self.exhausted.1);
        }
        let _ = writeln!(s, "worst 1>2 {} margin {:.6} lower {:.6}", self.worst12.event, self.worst12.margin, self.worst12.lower);
        let _ = writeln!(s, "worst 2>1 {} margin {:.6} lower {:.6}", self.worst21.event, self.worst21.margin, self.worst21.lower);
        match &self.verdict {
            AuditVerdict::Consistent => {
                let _ = writeln!(s, "verdict  Consistent{}", if self.wide_intervals { " (wide intervals)" } else { "" });
            }
            AuditVerdict::Violation { event, direction, margin, ci } => {
                let _ = writeln!(
                    s,
                    "verdict  Violation on {event} ({direction}): margin {margin:.6}, interval [{:.6}, {:.6}]",
                    ci.0, ci.1
                );
            }
        }
        s
    }
}

// ------------------------------------------------------------ statistics

/// Lower end `p` with `P[Bin(n, p) ≥ k] = a`.
pub fn cp_lower(k: usize, n: usize, a: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    bisect(|p| beta_reg(k as f64, (n - k + 1) as f64, p) - a)
}

/// Upper end `p` with `P[Bin(n, p) ≤ k] = a`.
pub fn cp_upper(k: usize, n: usize, a: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    bisect(|p| beta_reg((k + 1) as f64, (n - k) as f64, p) - (1.0 - a))
}

/// Root of an increasing function on [0, 1].
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------- events

#[derive(Debug, Clone, PartialEq)]
enum Obs {
    Real(f64),
    Discrete(Value),
}

fn observe(m: &Memory, var: &str) -> Option<Obs> {
    match m.get(var)? {
        v @ (Value::Bool(_) | Value::Int(_)) => Some(Obs::Discrete(v.clone())),
        v => v.as_f64().map(Obs::Real),
    }
}

enum EventSet {
    /// Half-open `(lo, hi]` over bin indices `lo..hi` of the edge list.
    Bins { edges: Vec<f64>, ranges: Vec<(usize, usize, String)> },
    Values { values: Vec<Value>, masks: Vec<(u64, String)> },
}

impl EventSet {
    fn len(&self) -> usize {
        match self {
            EventSet::Bins { ranges, .. } => ranges.len(),
            EventSet::Values { masks, .. } => masks.len(),
        }
    }

    /// Per-outcome cell: bin index or value index.
    fn cell(&self, o: &Obs) -> Option<usize> {
        match (self, o) {
            (EventSet::Bins { edges, .. }, Obs::Real(x)) => Some(edges.partition_point(|e| e < x)),
            // values missing from the pilot land in the spare last cell
            (EventSet::Values { values, .. }, Obs::Discrete(v)) => Some(values.iter().position(|w| w == v).unwrap_or(values.len())),
            _ => None,
        }
    }

    fn cells(&self) -> usize {
        match self {
            EventSet::Bins { edges, .. } => edges.len() + 1,
            EventSet::Values { values, .. } => values.len() + 1,
        }
    }

    fn count(&self, hist: &[usize]) -> Vec<usize> {
        match self {
            EventSet::Bins { ranges, .. } => ranges.iter().map(|(lo, hi, _)| hist[*lo..*hi].iter().sum()).collect(),
            EventSet::Values { masks, .. } => masks
                .iter()
                .map(|(m, _)| (0..64).filter(|i| m >> i & 1 == 1 && *i < hist.len()).map(|i| hist[i]).sum())
                .collect(),
        }
    }

    fn labels(&self) -> Vec<String> {
        match self {
            EventSet::Bins { ranges, .. } => ranges.iter().map(|r| r.2.clone()).collect(),
            EventSet::Values { masks, .. } => masks.iter().map(|m| m.1.clone()).collect(),
        }
    }
}

fn bin_events(edges: Vec<f64>) -> EventSet {
    let b = edges.len() + 1;
    let show = |i: usize| if i == 0 { "-inf".to_string() } else { format!("{:.4}", edges[i - 1]) };
    let show_hi = |i: usize| if i == b { "inf".to_string() } else { format!("{:.4}", edges[i - 1]) };
    let mut ranges = Vec::new();
    for i in 0..b {
        ranges.push((i, i + 1, format!("({}, {}]", show(i), show_hi(i + 1))));
    }
    for i in 2..b {
        ranges.push((0, i, format!("(-inf, {}]", show_hi(i))));
        ranges.push((i - 1, b, format!("({}, inf)", show(i - 1))));
    }
    EventSet::Bins { edges, ranges }
}

fn value_events(values: Vec<Value>) -> EventSet {
    let k = values.len();
    let show = |mask: u64| {
        let parts: Vec<String> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| values[i].to_string()).collect();
        format!("{{{}}}", parts.join(", "))
    };
    let masks = if k <= SUBSET_VALUES {
        (1..(1u64 << k)).filter(|&m| k == 1 || m != (1 << k) - 1).map(|m| (m, show(m))).collect()
    } else {
        (0..k).map(|i| (1u64 << i, show(1 << i))).collect()
    };
    EventSet::Values { values, masks }
}

// ------------------------------------------------------------------ audit

fn run_all(spec: &AuditSpec, m: &Memory, streams: std::ops::Range<u64>) -> Result<Vec<Option<Obs>>, AuditError> {
    streams
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(spec.seed, i);
            let out = sample_once(&spec.machine, &spec.body, m, spec.fuel, &mut rng).map_err(|e| AuditError::Program(e.to_string()))?;
            match out {
                None => Ok(None),
                Some(o) => observe(&o, &spec.output)
                    .map(Some)
                    .ok_or_else(|| AuditError::Spec(format!("output `{}` is not a number or boolean", spec.output))),
            }
        })
        .collect()
}

fn build_events(spec: &AuditSpec) -> Result<EventSet, AuditError> {
    let pilot = PILOT_TRIALS.min(spec.trials) as u64;
    let mut pooled = run_all(spec, &spec.left, PILOT_STREAM..PILOT_STREAM + pilot)?;
    pooled.extend(run_all(spec, &spec.right, PILOT_STREAM..PILOT_STREAM + pilot)?);
    let pooled: Vec<Obs> = pooled.into_iter().flatten().collect();
    if let Some(Obs::Discrete(_)) = pooled.first() {
        let values: BTreeSet<Value> = pooled
            .into_iter()
            .filter_map(|o| match o {
                Obs::Discrete(v) => Some(v),
                Obs::Real(_) => None,
            })
            .collect();
        if values.len() > 63 {
            return Err(AuditError::Spec("discrete output takes more than 63 values".into()));
        }
        return Ok(value_events(values.into_iter().collect()));
    }
    let edges = match &spec.events {
        Events::Edges(e) => e.clone(),
        Events::Quantiles(bins) => {
            let mut xs: Vec<f64> = pooled
                .into_iter()
                .filter_map(|o| match o {
                    Obs::Real(x) => Some(x),
                    Obs::Discrete(_) => None,
                })
                .collect();
            xs.sort_by(f64::total_cmp);
            if xs.is_empty() {
                return Err(AuditError::Spec("pilot sample produced no output".into()));
            }
            let mut edges: Vec<f64> = (1..*bins).map(|i| xs[i * xs.len() / bins]).collect();
            edges.dedup();
            edges
        }
    };
    Ok(bin_events(edges))
}

fn histogram(events: &EventSet, obs: &[Option<Obs>]) -> (Vec<usize>, usize) {
    let mut hist = vec![0usize; events.cells()];
    let mut exhausted = 0;
    for o in obs {
        match o.as_ref().and_then(|o| events.cell(o)) {
            Some(c) => hist[c] += 1,
            None if o.is_none() => exhausted += 1,
            None => {}
        }
    }
    (hist, exhausted)
}

fn l1_distance(a: &Memory, b: &Memory) -> Option<Rational> {
    fn dist(x: &Value, y: &Value) -> Option<Rational> {
        match (x, y) {
            (Value::Bool(p), Value::Bool(q)) => Some(if p == q { Rational::from_integer(0.into()) } else { Rational::from_integer(1.into()) }),
            (Value::Vector(xs), Value::Vector(ys)) if xs.len() == ys.len() => {
                xs.iter().zip(ys).map(|(x, y)| dist(x, y)).sum()
            }
            _ => Some((x.as_rational()? - y.as_rational()?).abs()),
        }
    }
    a.iter().map(|(k, v)| dist(v, b.get(k)?)).sum()
}

pub fn audit_dp(spec: &AuditSpec) -> Result<AuditReport, AuditError> {
    if spec.trials < 1000 {
        return Err(AuditError::Spec(format!("at least 1000 trials are needed, got {}", spec.trials)));
    }
    match l1_distance(&spec.left, &spec.right) {
        Some(d) if d <= spec.bound => {}
        Some(d) => {
            return Err(AuditError::Spec(format!(
                "inputs are at distance {}, above the declared bound {}",
                format_rational(&d),
                format_rational(&spec.bound)
            )))
        }
        None => return Err(AuditError::Spec("inputs do not have the same shape".into())),
    }
    let events = build_events(spec)?;
    let n = spec.trials;
    let (h1, ex1) = histogram(&events, &run_all(spec, &spec.left, 0..n as u64)?);
    let (h2, ex2) = histogram(&events, &run_all(spec, &spec.right, 0..n as u64)?);
    let (c1, c2) = (events.count(&h1), events.count(&h2));
    let e = events.len().max(1);
    // two margins per event, each refuted through two one-sided bounds
    let a = spec.alpha / (4 * e) as f64;
    let gamma = to_f64(&spec.eps).exp();
    let delta = to_f64(&spec.delta);
    let nf = n as f64;
    let mut rows = Vec::with_capacity(e);
    for (label, (&k1, &k2)) in events.labels().into_iter().zip(c1.iter().zip(&c2)) {
        let ci1 = (cp_lower(k1, n, a), (cp_upper(k1, n, a) + ex1 as f64 / nf).min(1.0));
        let ci2 = (cp_lower(k2, n, a), (cp_upper(k2, n, a) + ex2 as f64 / nf).min(1.0));
        let (p1, p2) = (k1 as f64 / nf, k2 as f64 / nf);
        rows.push(EventRow {
            event: label,
            k1,
            k2,
            p1,
            p2,
            ci1,
            ci2,
            margin12: (p1 - gamma * p2 - delta, ci1.0 - gamma * ci2.1 - delta, ci1.1 - gamma * ci2.0 - delta),
            margin21: (p2 - gamma * p1 - delta, ci2.0 - gamma * ci1.1 - delta, ci2.1 - gamma * ci1.0 - delta),
        });
    }
    let worst = |f: fn(&EventRow) -> (f64, f64, f64)| {
        rows.iter()
            .max_by(|x, y| f(x).1.total_cmp(&f(y).1))
            .map(|r| Worst { event: r.event.clone(), margin: f(r).0, lower: f(r).1 })
            .unwrap_or(Worst { event: "-".into(), margin: 0.0, lower: 0.0 })
    };
    let (worst12, worst21) = (worst(|r| r.margin12), worst(|r| r.margin21));
    let verdict = if worst12.lower > 0.0 && worst12.lower >= worst21.lower {
        violation(&rows, &worst12, "1 over 2", |r| r.margin12)
    } else if worst21.lower > 0.0 {
        violation(&rows, &worst21, "2 over 1", |r| r.margin21)
    } else {
        AuditVerdict::Consistent
    };
    let mut widths: Vec<f64> = rows.iter().flat_map(|r| [r.ci1.1 - r.ci1.0, r.ci2.1 - r.ci2.0]).collect();
    widths.sort_by(f64::total_cmp);
    let wide = widths.get(widths.len() / 2).is_some_and(|w| w / 2.0 > 0.05);
    Ok(AuditReport {
        version: env!("CARGO_PKG_VERSION").into(),
        program: spec.program.clone(),
        output: spec.output.clone(),
        left: spec.left.to_string(),
        right: spec.right.to_string(),
        eps: format_rational(&spec.eps),
        delta: format_rational(&spec.delta),
        trials: n,
        seed: spec.seed,
        alpha: spec.alpha,
        alpha_per_bound: a,
        exhausted: (ex1, ex2),
        events: rows,
        worst12,
        worst21,
        verdict,
        wide_intervals: wide,
    })
}

fn violation(rows: &[EventRow], w: &Worst, direction: &str, f: fn(&EventRow) -> (f64, f64, f64)) -> AuditVerdict {
    let r = rows.iter().find(|r| r.event == w.event).expect("worst row exists");
    let (m, lo, hi) = f(r);
    AuditVerdict::Violation { event: r.event.clone(), direction: direction.into(), margin: m, ci: (lo, hi) }
}

// --------------------------------------------------------------- loading

pub fn svalue_to_value(v: &SValue, ty: &Ty) -> Option<Value> {
    let raw = match v {
        SValue::Bool(b) => Value::Bool(*b),
        SValue::Num(q) if *ty == Ty::Int => Value::Int(q.is_integer().then(|| q.to_integer())?),
        SValue::Num(q) => Value::Real(q.clone()),
        SValue::Tuple(xs) => Value::Vector(xs.iter().map(|x| svalue_to_value(x, &Ty::Real)).collect::<Option<_>>()?),
        _ => return None,
    };
    let ok = matches!(
        (ty, &raw),
        (Ty::Bool, Value::Bool(_)) | (Ty::Int, Value::Int(_)) | (Ty::Real, Value::Real(_))
    ) || matches!((ty, &raw), (Ty::Vec(n), Value::Vector(xs)) if xs.len() == *n);
    ok.then(|| coerce(ty, raw))
}

/// The all-zero memory of the program with the given variables set.
pub fn input_memory(tenv: &TypeEnv, fields: &BTreeMap<String, SValue>) -> Result<Memory, AuditError> {
    let mut m = tenv.default_memory();
    for (name, v) in fields {
        let ty = tenv
            .ctx
            .lookup(name)
            .ok_or_else(|| AuditError::Spec(format!("`{name}` is not a program variable")))?;
        let ty = tenv.resolve(ty, Default::default()).map_err(|e| AuditError::Spec(e.to_string()))?;
        let value = svalue_to_value(v, &ty).ok_or_else(|| AuditError::Spec(format!("{v} does not fit `{name}: {ty}`")))?;
        m.set(name, value);
    }
    Ok(m)
}

/// Reads an audit file; its program is resolved next to it.
pub fn load_audit(path: &Path, overrides: &BTreeMap<String, SValue>) -> Result<AuditSpec, AuditError> {
    let io = |p: &Path, e: std::io::Error| AuditError::Io { path: p.display().to_string(), message: e.to_string() };
    let src = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let ast = parse_records(&src, "audit")?;
    let (prog, _) = ast.program.clone().ok_or_else(|| AuditError::Spec("missing `program`".into()))?;
    let prog_path = path.parent().unwrap_or(Path::new(".")).join(&prog);
    let prog_src = std::fs::read_to_string(&prog_path).map_err(|e| io(&prog_path, e))?;
    audit_from_source(&src, &prog_src, &prog_path.display().to_string(), overrides)
}

pub fn audit_from_source(
    src: &str,
    program_src: &str,
    program_name: &str,
    overrides: &BTreeMap<String, SValue>,
) -> Result<AuditSpec, AuditError> {
    let ast = parse_records(src, "audit")?;
    if ast.proof.is_some() || !ast.defs.is_empty() {
        return Err(AuditError::Spec("audit files take no `proof` or `def`".into()));
    }
    let mut env: Env = eval_params(&ast, overrides)?;
    let (program, machine, tenv) = load_program(program_src, &env).map_err(|e| AuditError::Program(e.to_string()))?;
    eval_lets(&ast, &mut env)?;
    let (mut left, mut right, mut audit) = (None, None, None);
    for r in &ast.records {
        let (name, params, _) = record_fields(r, &env)?;
        let slot = match name.as_str() {
            "left" => &mut left,
            "right" => &mut right,
            "audit" => &mut audit,
            other => return Err(AuditError::Spec(format!("unknown record `{other}`"))),
        };
        if slot.replace(params).is_some() {
            return Err(AuditError::Spec(format!("duplicate `{name}`")));
        }
    }
    let missing = |n: &str| AuditError::Spec(format!("missing `{n}(...)`"));
    let (left, right, audit) = (left.ok_or_else(|| missing("left"))?, right.ok_or_else(|| missing("right"))?, audit.ok_or_else(|| missing("audit"))?);
    let known = ["output", "eps", "delta", "bound", "trials", "seed", "alpha", "bins", "edges", "fuel"];
    if let Some(k) = audit.0.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(AuditError::Spec(format!("unknown field `{k}`")));
    }
    let spec_err = |e: crate::aprhl::params::ParamError| AuditError::Spec(e.to_string());
    let output = audit.string("output").map_err(spec_err)?.ok_or_else(|| missing("audit(output: ...)"))?;
    if tenv.ctx.lookup(&output).is_none() {
        return Err(AuditError::Spec(format!("output `{output}` is not a program variable")));
    }
    let num = |k: &str| audit.number(k).map_err(spec_err);
    let eps = num("eps")?.ok_or_else(|| missing("audit(eps: ...)"))?;
    let delta = num("delta")?.unwrap_or_default();
    let bound = num("bound")?.unwrap_or_else(|| Rational::from_integer(1.into()));
    let int = |k: &str, d: i64| audit.integer(k).map_err(spec_err).map(|v| v.unwrap_or(d));
    let trials = usize::try_from(int("trials", 1_000_000)?).map_err(|_| AuditError::Spec("negative trials".into()))?;
    let seed = u64::try_from(int("seed", 0)?).map_err(|_| AuditError::Spec("negative seed".into()))?;
    let fuel = u64::try_from(int("fuel", 1_000_000)?).map_err(|_| AuditError::Spec("negative fuel".into()))?;
    let alpha = num("alpha")?.map(|q| to_f64(&q)).unwrap_or(0.001);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AuditError::Spec("alpha must lie in (0, 1)".into()));
    }
    let events = match audit.0.get("edges") {
        Some(SValue::Tuple(xs)) => {
            let mut edges = xs
                .iter()
                .map(|x| x.as_exp().and_then(|e| e.as_rational()).map(|q| to_f64(&q)))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| AuditError::Spec("`edges` must be numbers".into()))?;
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            Events::Edges(edges)
        }
        Some(v) => return Err(AuditError::Spec(format!("`edges` must be a tuple, got {v}"))),
        None => Events::Quantiles(usize::try_from(int("bins", 40)?).ok().filter(|&b| b >= 2).ok_or_else(|| AuditError::Spec("need at least 2 bins".into()))?),
    };
    Ok(AuditSpec {
        program: program_name.to_string(),
        machine,
        body: program.body,
        left: input_memory(&tenv, &left.0)?,
        right: input_memory(&tenv, &right.0)?,
        bound,
        output,
        eps,
        delta,
        events,
        trials,
        seed,
        alpha,
        fuel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clopper_pearson_matches_closed_forms() {
        // k = 0: upper end is 1 − a^(1/n)
        let (n, a) = (50, 0.025);
        assert!((cp_upper(0, n, a) - (1.0 - a.powf(1.0 / n as f64))).abs() < 1e-12);
        // k = n: lower end is a^(1/n)
        assert!((cp_lower(n, n, a) - a.powf(1.0 / n as f64)).abs() < 1e-12);
        let (lo, hi) = (cp_lower(30, 100, 0.025), cp_upper(30, 100, 0.025));
        assert!(lo < 0.3 && 0.3 < hi);
    }

    #[test]
    fn bins_and_half_lines() {
        let ev = bin_events(vec![0.0, 1.0]);
        assert_eq!(ev.len(), 3 + 2);
        assert_eq!(ev.cell(&Obs::Real(0.5)), Some(1));
        assert_eq!(ev.cell(&Obs::Real(1.0)), Some(1));
        assert_eq!(ev.count(&[5, 7, 11]), vec![5, 7, 11, 12, 18]);
    }

    #[test]
    fn value_subsets_skip_the_full_set() {
        let ev = value_events(vec![Value::int(1), Value::int(2), Value::int(3)]);
        assert_eq!(ev.len(), 6);
    }
}
