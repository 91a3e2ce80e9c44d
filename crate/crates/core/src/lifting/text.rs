//! The `lift` text format: two finite sub-distributions over named points,
//! a relation and a grade.
//!
//! ```text
//! lift 1
//! left(a: 0.5, b: 0.5)
//! right(a: 0.25, b: 0.75)
//! relation(pairs: (("a", "a"), ("b", "b")))
//! grade(gamma: exp(1), delta: 0, symmetric: true)
//! ```
//!
//! `relation(kind: "eq")` and `relation(kind: "full")` name the two common relations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::{lifting_member, skew_distance, witness_search, LiftError, Membership, Relation};
use crate::aprhl::params::SValue;
use crate::aprhl::script::{eval_lets, eval_params, parse_records, record_fields, Env, ScriptError};
use crate::grade::Grade;
use crate::measure::SubDist;
use crate::num::rational::format_rational;
use crate::num::{ExpNum, Rational};

#[derive(Debug, Error)]
pub enum LiftCheckError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("lift: {0}")]
    Spec(String),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

#[derive(Debug, Clone)]
pub enum RelationSpec {
    Eq,
    Full,
    Pairs(Vec<(String, String)>),
}

#[derive(Debug, Clone)]
pub struct LiftCheck {
    pub left: SubDist<String>,
    pub right: SubDist<String>,
    pub relation: RelationSpec,
    pub grade: Grade,
    pub symmetric: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftCheckReport {
    pub grade: String,
    pub symmetric: bool,
    pub holds: bool,
    pub violation: Option<String>,
    /// Skew distance at γ, reported for the equality relation.
    pub skew: Option<String>,
    pub witness: bool,
}

impl LiftCheckReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "grade     {}{}", self.grade, if self.symmetric { " (symmetric)" } else { "" });
        let _ = writeln!(s, "member    {}", self.holds);
        if let Some(v) = &self.violation {
            let _ = writeln!(s, "violation {v}");
        }
        if let Some(k) = &self.skew {
            let _ = writeln!(s, "skew      {k}");
        }
        let _ = writeln!(s, "witness   {}", if self.witness { "feasible" } else { "infeasible" });
        s
    }
}

fn weights(p: &BTreeMap<String, SValue>) -> Result<SubDist<String>, LiftCheckError> {
    let pairs = p
        .iter()
        .map(|(k, v)| match v {
            SValue::Num(q) => Ok((k.clone(), q.clone())),
            other => Err(LiftCheckError::Spec(format!("weight of `{k}` must be a number, got {other}"))),
        })
        .collect::<Result<Vec<(String, Rational)>, _>>()?;
    SubDist::from_weights(pairs).map_err(|e| LiftCheckError::Spec(e.to_string()))
}

fn point(v: &SValue) -> Option<String> {
    match v {
        SValue::Str(s) => Some(s.clone()),
        _ => None,
    }
}

pub fn parse_liftcheck(src: &str) -> Result<LiftCheck, LiftCheckError> {
    let ast = parse_records(src, "lift")?;
    if ast.program.is_some() || ast.proof.is_some() || !ast.defs.is_empty() {
        return Err(LiftCheckError::Spec("lift files take only `let`, `param` and records".into()));
    }
    let mut env: Env = eval_params(&ast, &BTreeMap::new())?;
    eval_lets(&ast, &mut env)?;
    let mut recs = BTreeMap::new();
    for r in &ast.records {
        let (name, params, _) = record_fields(r, &env)?;
        if !["left", "right", "relation", "grade"].contains(&name.as_str()) {
            return Err(LiftCheckError::Spec(format!("unknown record `{name}`")));
        }
        if recs.insert(name.clone(), params).is_some() {
            return Err(LiftCheckError::Spec(format!("duplicate `{name}`")));
        }
    }
    let mut take = |n: &str| recs.remove(n).ok_or_else(|| LiftCheckError::Spec(format!("missing `{n}(...)`")));
    let (left, right, rel, grade) = (take("left")?, take("right")?, take("relation")?, take("grade")?);
    let relation = match (rel.0.get("kind"), rel.0.get("pairs")) {
        (Some(SValue::Str(k)), None) if k == "eq" => RelationSpec::Eq,
        (Some(SValue::Str(k)), None) if k == "full" => RelationSpec::Full,
        // a single pair: `pairs: (("a", "b"))` reads as `("a", "b")`
        (None, Some(SValue::Tuple(xy))) if xy.len() == 2 && point(&xy[0]).is_some() => RelationSpec::Pairs(
            vec![(point(&xy[0]).unwrap_or_default(), point(&xy[1]).ok_or_else(|| LiftCheckError::Spec("pair points must be strings".into()))?)],
        ),
        (None, Some(SValue::Tuple(ps))) => RelationSpec::Pairs(
            ps.iter()
                .map(|p| match p {
                    SValue::Tuple(xy) if xy.len() == 2 => point(&xy[0]).zip(point(&xy[1])),
                    _ => None,
                })
                .collect::<Option<_>>()
                .ok_or_else(|| LiftCheckError::Spec("`pairs` must be a tuple of (\"x\", \"y\") pairs".into()))?,
        ),
        _ => return Err(LiftCheckError::Spec("relation needs `kind: \"eq\"`, `kind: \"full\"` or `pairs: (...)`".into())),
    };
    let g = |k: &str| grade.0.get(k).and_then(SValue::as_exp);
    let gamma = g("gamma").ok_or_else(|| LiftCheckError::Spec("grade needs a numeric `gamma`".into()))?;
    let delta = g("delta").unwrap_or_else(ExpNum::zero);
    let symmetric = grade.flag("symmetric").map_err(|e| LiftCheckError::Spec(e.to_string()))?;
    Ok(LiftCheck {
        left: weights(&left.0)?,
        right: weights(&right.0)?,
        relation,
        grade: Grade::new(gamma, delta).map_err(|e| LiftCheckError::Spec(e.to_string()))?,
        symmetric,
    })
}

pub fn run_liftcheck(lc: &LiftCheck) -> Result<LiftCheckReport, LiftCheckError> {
    let rel: Relation<String> = match &lc.relation {
        RelationSpec::Eq => Relation::Eq,
        RelationSpec::Full => Relation::full(),
        RelationSpec::Pairs(ps) => Relation::explicit(ps.iter().cloned()),
    };
    let m = lifting_member(&lc.left, &lc.right, &rel, &lc.grade, lc.symmetric)?;
    let violation = match &m {
        Membership::Holds => None,
        Membership::Fails(v) => Some(format!(
            "{:?}: set {{{}}} image {{{}}}: {} > {}",
            v.direction,
            v.set.join(", "),
            v.image.join(", "),
            v.lhs,
            v.rhs
        )),
    };
    let skew = matches!(lc.relation, RelationSpec::Eq).then(|| {
        let d = skew_distance(&lc.left, &lc.right, lc.grade.gamma());
        d.as_rational().map(|q| format_rational(&q)).unwrap_or_else(|| d.to_string())
    });
    Ok(LiftCheckReport {
        grade: lc.grade.to_string(),
        symmetric: lc.symmetric,
        holds: m.holds(),
        violation,
        skew,
        witness: witness_search(&lc.left, &lc.right, &rel, &lc.grade).is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randomized_response_pair() {
        let src = r#"lift 1
left(yes: 0.75, no: 0.25)
right(yes: 0.25, no: 0.75)
relation(kind: "eq")
grade(gamma: 3, delta: 0, symmetric: true)
"#;
        let r = run_liftcheck(&parse_liftcheck(src).unwrap()).unwrap();
        assert!(r.holds && r.witness);
        assert_eq!(r.skew.as_deref(), Some("0"));
        let tight = src.replace("gamma: 3", "gamma: 2");
        let r = run_liftcheck(&parse_liftcheck(&tight).unwrap()).unwrap();
        assert!(!r.holds && !r.witness);
        assert_eq!(r.skew.as_deref(), Some("0.25"));
    }

    #[test]
    fn explicit_pairs() {
        let src = r#"lift 1
left(a: 1)
right(b: 1)
relation(pairs: (("a", "b")))
grade(gamma: 1, delta: 0)
"#;
        assert!(run_liftcheck(&parse_liftcheck(src).unwrap()).unwrap().holds);
    }
}
