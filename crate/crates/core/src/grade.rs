//! Privacy grades: the monoid ([1,∞),×,1) × ([0,∞),+,0) with the product order.

use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::num::{format_rational, ExpNum, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GradeError {
    #[error("gamma must be at least 1, got {0}")]
    GammaBelowOne(String),
    #[error("delta must be nonnegative, got {0}")]
    NegativeDelta(String),
}

/// A grade `(γ, δ)`. Both components are exponential polynomials so that
/// `γ = e^ε` with rational `ε` stays exact through every rule.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Grade {
    gamma: ExpNum,
    delta: ExpNum,
}

impl Grade {
    pub fn new(gamma: ExpNum, delta: ExpNum) -> Result<Self, GradeError> {
        if gamma < ExpNum::one() {
            return Err(GradeError::GammaBelowOne(gamma.to_string()));
        }
        if delta < ExpNum::zero() {
            return Err(GradeError::NegativeDelta(delta.to_string()));
        }
        Ok(Self { gamma, delta })
    }

    /// The unit `(1, 0)`.
    pub fn identity() -> Self {
        Self { gamma: ExpNum::one(), delta: ExpNum::zero() }
    }

    /// `(e^eps, delta)`.
    pub fn from_eps(eps: Rational, delta: Rational) -> Result<Self, GradeError> {
        Self::new(ExpNum::exp(eps), ExpNum::rational(delta))
    }

    pub fn from_rationals(gamma: Rational, delta: Rational) -> Result<Self, GradeError> {
        Self::new(ExpNum::rational(gamma), ExpNum::rational(delta))
    }

    pub fn gamma(&self) -> &ExpNum {
        &self.gamma
    }

    pub fn delta(&self) -> &ExpNum {
        &self.delta
    }

    /// `ε = ln γ` when it is an exact rational.
    pub fn eps_exact(&self) -> Option<Rational> {
        if let Some(x) = self.gamma.as_pure_exp() {
            return Some(x);
        }
        self.gamma.as_rational().filter(|g| g.is_one()).map(|_| Rational::zero())
    }

    pub fn eps_f64(&self) -> f64 {
        self.gamma.ln_f64()
    }

    pub fn is_identity(&self) -> bool {
        self.gamma == ExpNum::one() && self.delta.is_zero()
    }

    pub fn leq(&self, other: &Grade) -> bool {
        grade_leq(self, other)
    }

    pub fn to_record(&self) -> GradeRecord {
        GradeRecord {
            gamma: self.gamma.to_string(),
            delta: self.delta.to_string(),
            eps: self.eps_exact().map(|e| format_rational(&e)).unwrap_or_else(|| format!("{}", self.eps_f64())),
            gamma_f64: self.gamma.to_f64(),
            delta_f64: self.delta.to_f64(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradeRecord {
    pub gamma: String,
    pub delta: String,
    pub eps: String,
    pub gamma_f64: f64,
    pub delta_f64: f64,
}

/// Sequential composition `(γγ′, δ+δ′)`.
pub fn grade_seq(g1: &Grade, g2: &Grade) -> Grade {
    Grade { gamma: &g1.gamma * &g2.gamma, delta: &g1.delta + &g2.delta }
}

/// Grade of relational composition.
///
/// The additive part is `max(δ+γδ′, δ′+γ′δ)`: with symmetric liftings each
/// direction of the composed inequality needs its own bound, and the smaller
/// of the two is not enough (see `grade_comp_min`).
pub fn grade_comp(g1: &Grade, g2: &Grade) -> Grade {
    let (a, b) = comp_deltas(g1, g2);
    Grade { gamma: &g1.gamma * &g2.gamma, delta: a.max(b) }
}

/// The composition grade with `min` in place of `max`. Kept for mutation
/// testing of the soundness harness; not used by any rule.
pub fn grade_comp_min(g1: &Grade, g2: &Grade) -> Grade {
    let (a, b) = comp_deltas(g1, g2);
    Grade { gamma: &g1.gamma * &g2.gamma, delta: a.min(b) }
}

/// `δ+γδ′` and `δ′+γ′δ`.
fn comp_deltas(g1: &Grade, g2: &Grade) -> (ExpNum, ExpNum) {
    let a = &g1.delta + &(&g1.gamma * &g2.delta);
    let b = &g2.delta + &(&g2.gamma * &g1.delta);
    (a, b)
}

pub fn grade_leq(g1: &Grade, g2: &Grade) -> bool {
    g1.gamma <= g2.gamma && g1.delta <= g2.delta
}

/// Componentwise maximum (least upper bound in the product order).
pub fn grade_join(g1: &Grade, g2: &Grade) -> Grade {
    Grade { gamma: g1.gamma.clone().max(g2.gamma.clone()), delta: g1.delta.clone().max(g2.delta.clone()) }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.gamma, self.delta)
    }
}

impl fmt::Debug for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
