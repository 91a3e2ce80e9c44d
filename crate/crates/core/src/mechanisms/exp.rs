//! Exponential mechanism over a finite candidate set with a score table.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::Rng;

use crate::grade::Grade;
use crate::num::rational::to_f64;
use crate::num::{ExpNum, Rational};

pub type ScoreFn = Arc<dyn Fn(&[i64], i64) -> Rational + Send + Sync>;

/// `f(a, b) = base(b) · exp(ε q(a, b))` on the candidates `b`.
#[derive(Clone)]
pub struct ExpMech {
    pub eps: Rational,
    pub candidates: Vec<i64>,
    pub base: Vec<Rational>,
    score: ScoreFn,
    /// Declared sensitivity constant `c` of the score.
    pub c: Rational,
    /// Inputs over which the sensitivity hypothesis is verified.
    pub inputs: Vec<Vec<i64>>,
}

impl fmt::Debug for ExpMech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpMech")
            .field("eps", &self.eps)
            .field("candidates", &self.candidates)
            .field("c", &self.c)
            .field("inputs", &self.inputs.len())
            .finish()
    }
}

fn l1(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

impl ExpMech {
    pub fn new(
        eps: Rational,
        candidates: Vec<i64>,
        base: Vec<Rational>,
        score: ScoreFn,
        c: Rational,
        inputs: Vec<Vec<i64>>,
    ) -> Result<Self, String> {
        if eps <= Rational::zero() {
            return Err("epsilon must be positive".into());
        }
        if candidates.is_empty() || candidates.len() != base.len() {
            return Err("need one positive base weight per candidate".into());
        }
        if base.iter().any(|w| *w <= Rational::zero()) {
            return Err("base weights must be positive".into());
        }
        Ok(Self { eps, candidates, base, score, c, inputs })
    }

    pub fn score(&self, a: &[i64], b: i64) -> Rational {
        (self.score)(a, b)
    }

    /// Unnormalized output weights `base(b)·e^{ε q(a,b)}`.
    pub fn weights(&self, a: &[i64]) -> Vec<(i64, ExpNum)> {
        self.candidates
            .iter()
            .zip(&self.base)
            .map(|(&b, w)| (b, ExpNum::term(w.clone(), &self.eps * self.score(a, b))))
            .collect()
    }

    pub fn probabilities(&self, a: &[i64]) -> Vec<(i64, f64)> {
        // shift exponents for stability
        let logs: Vec<f64> = self
            .candidates
            .iter()
            .zip(&self.base)
            .map(|(&b, w)| to_f64(w).ln() + to_f64(&(&self.eps * self.score(a, b))))
            .collect();
        let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ws: Vec<f64> = logs.iter().map(|l| (l - mx).exp()).collect();
        let z: f64 = ws.iter().sum();
        self.candidates.iter().zip(ws).map(|(&b, w)| (b, w / z)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, a: &[i64], rng: &mut R) -> i64 {
        let probs = self.probabilities(a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (b, p) in &probs {
            acc += p;
            if u < acc {
                return *b;
            }
        }
        probs.last().map(|(b, _)| *b).expect("nonempty candidates")
    }

    /// Largest `|q(a,b) − q(a′,b)| / ‖a − a′‖₁` over the declared inputs.
    pub fn observed_sensitivity(&self) -> Rational {
        let mut worst = Rational::zero();
        for (i, a) in self.inputs.iter().enumerate() {
            for a2 in &self.inputs[i + 1..] {
                let d = l1(a, a2);
                if d == 0 {
                    continue;
                }
                for &b in &self.candidates {
                    let gap = (self.score(a, b) - self.score(a2, b)).abs() / Rational::from_integer(d.into());
                    if gap > worst {
                        worst = gap;
                    }
                }
            }
        }
        worst
    }

    /// `(e^{2εrc}, 0)` after checking the sensitivity hypothesis on the inputs.
    pub fn certified_grade(&self, r: &Rational) -> Result<Grade, String> {
        let seen = self.observed_sensitivity();
        if seen > self.c {
            return Err(format!("score sensitivity {seen} exceeds the declared constant {}", self.c));
        }
        Grade::from_eps(Rational::from_integer(2.into()) * &self.eps * r * &self.c, Rational::zero())
            .map_err(|e| e.to_string())
    }
}
