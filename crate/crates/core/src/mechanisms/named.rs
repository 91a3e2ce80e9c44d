//! Closed-form certificates for the named mechanisms, each cross-checked by
//! the window certifier on sampled input pairs.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use super::exp::ExpMech;
use super::window::{certify_window, CertStatus, Certificate, Refusal, Window};
use super::{DomainError, Mechanism};
use crate::grade::Grade;
use crate::num::rational::{from_f64, round_up, to_f64};
use crate::num::{ExpNum, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussVariant {
    /// `c > 3/2`, `2 ln(1.25/δ) < c²`, two-sided window.
    Main,
    /// `c > (1+√3)/2`, `2 ln(0.66/δ) < c²`, half-line window.
    Relaxed,
}

#[derive(Debug, Clone)]
pub enum NamedKind {
    Lap { sigma: Rational },
    Gauss { sigma: Rational, gamma: ExpNum, delta: Rational, variant: GaussVariant },
    Cauchy { rho: Rational },
    Exp { mech: ExpMech },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("side condition violated: {0}")]
    SideConditionViolated(String),
    #[error("grid cross-check failed at a = {a}, a' = {a2}: {refusal}")]
    CrossCheckFailed { a: f64, a2: f64, refusal: Refusal },
}

/// Deterministic sample of input pairs with `|a − a′| ≤ r`.
pub fn sample_pairs(r: f64, n: usize) -> Vec<(f64, f64)> {
    let centers = [0.0, -3.7, 2.2, 11.5, -40.25];
    let fractions = [1.0, -1.0, 0.5, -0.37, 0.999];
    let mut out = Vec::with_capacity(n);
    'outer: for &c in &centers {
        for &f in &fractions {
            if out.len() == n {
                break 'outer;
            }
            out.push((c, c + f * r));
        }
    }
    out
}

const CROSS_CHECK_PAIRS: usize = 20;

pub fn certify_named(kind: &NamedKind, r: &Rational) -> Result<Certificate, CertifyError> {
    if *r <= Rational::zero() {
        return Err(CertifyError::SideConditionViolated("radius r must be positive".into()));
    }
    let rf = to_f64(r);
    match kind {
        NamedKind::Lap { sigma } => {
            let m = Mechanism::laplace(to_f64(sigma))?;
            if *sigma <= Rational::zero() {
                return Err(DomainError::NonPositiveScale(to_f64(sigma)).into());
            }
            let grade = Grade::from_eps(r / sigma, Rational::zero()).expect("valid grade");
            let gamma = grade.gamma().to_f64();
            let checks = cross_check(&m, rf, gamma, 0.0, |_, _| Window::Whole)?;
            Ok(finish("lap", m, rf, grade, None, Window::Whole, "whole line", checks))
        }
        NamedKind::Cauchy { rho } => {
            let m = Mechanism::cauchy(to_f64(rho))?;
            let (upper, formula) = cauchy_gamma(r, rho);
            let grade = Grade::from_rationals(upper, Rational::zero()).expect("valid grade");
            let checks = cross_check(&m, rf, formula * (1.0 + 1e-12), 0.0, |_, _| Window::Whole)?;
            Ok(finish("cauchy", m, rf, grade, Some(formula), Window::Whole, "whole line", checks))
        }
        NamedKind::Gauss { sigma, gamma, delta, variant } => {
            let m = Mechanism::gauss(to_f64(sigma))?;
            if !(*gamma > ExpNum::one() && *gamma < ExpNum::exp(Rational::one())) {
                return Err(CertifyError::SideConditionViolated(format!("1 < gamma < e fails for gamma = {gamma}")));
            }
            if !(*delta > Rational::zero()) {
                return Err(CertifyError::SideConditionViolated("delta must be positive".into()));
            }
            let lg = gamma.ln_f64();
            let sf = to_f64(sigma);
            let c = sf * lg / rf;
            let d = to_f64(delta);
            let (c_min, k, label) = match variant {
                GaussVariant::Main => (1.5, 1.25, "c > 3/2"),
                GaussVariant::Relaxed => ((1.0 + 3f64.sqrt()) / 2.0, 0.66, "c > (1+sqrt 3)/2"),
            };
            if c <= c_min {
                return Err(CertifyError::SideConditionViolated(format!("{label} fails with c = sigma*ln(gamma)/r = {c}")));
            }
            if 2.0 * (k / d).ln() >= c * c {
                return Err(CertifyError::SideConditionViolated(format!(
                    "2 ln({k}/delta) < c^2 fails: {} >= {}",
                    2.0 * (k / d).ln(),
                    c * c
                )));
            }
            let w = sf * sf * lg / rf;
            let window_of = move |a: f64, a2: f64| {
                let mid = (a + a2) / 2.0;
                match variant {
                    GaussVariant::Main => Window::Interval { lo: mid - w, hi: mid + w },
                    GaussVariant::Relaxed if a2 <= a => Window::AtMost { hi: mid + w },
                    GaussVariant::Relaxed => Window::AtLeast { lo: mid - w },
                }
            };
            let checks = cross_check(&m, rf, gamma.to_f64(), d, window_of)?;
            let grade = Grade::new(gamma.clone(), ExpNum::rational(delta.clone())).expect("valid grade");
            let note = match variant {
                GaussVariant::Main => format!("|b - (a+a')/2| <= sigma^2 ln(gamma)/r = {w}"),
                GaussVariant::Relaxed => format!("half-line towards a', offset sigma^2 ln(gamma)/r = {w}"),
            };
            Ok(finish("gauss", m, rf, grade, None, window_of(0.0, rf), &note, checks))
        }
        NamedKind::Exp { mech } => {
            let grade = mech.certified_grade(r).map_err(CertifyError::SideConditionViolated)?;
            let mut cert = finish(
                "exp",
                Mechanism::laplace(1.0)?,
                rf,
                grade,
                None,
                Window::Whole,
                "whole candidate set",
                Vec::new(),
            );
            cert.status = CertStatus::Analytic;
            Ok(cert)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    name: &str,
    m: Mechanism,
    r: f64,
    grade: Grade,
    formula_gamma: Option<f64>,
    window: Window,
    note: &str,
    cross_checks: Vec<CertStatus>,
) -> Certificate {
    Certificate {
        mechanism: name.to_string(),
        family: m.family,
        r: Some(r),
        grade: grade.to_record(),
        grade_exact: grade,
        formula_gamma,
        window,
        window_note: note.to_string(),
        tail_mass: 0.0,
        status: CertStatus::Analytic,
        cross_checks,
    }
}

fn cross_check(
    m: &Mechanism,
    r: f64,
    gamma: f64,
    delta: f64,
    window_of: impl Fn(f64, f64) -> Window,
) -> Result<Vec<CertStatus>, CertifyError> {
    sample_pairs(r, CROSS_CHECK_PAIRS)
        .into_iter()
        .map(|(a, a2)| {
            certify_window(m, a, a2, gamma, 1.0, delta, window_of(a, a2))
                .map(|c| c.status)
                .map_err(|refusal| CertifyError::CrossCheckFailed { a, a2, refusal })
        })
        .collect()
}

/// `γ = 1 + (r² + r√(r²+4ρ²))/(2ρ²)`: a rational upper bound (verified
/// exactly) and the floating value.
pub fn cauchy_gamma(r: &Rational, rho: &Rational) -> (Rational, f64) {
    let (rf, pf) = (to_f64(r), to_f64(rho));
    let formula = 1.0 + (rf * rf + rf * (rf * rf + 4.0 * pf * pf).sqrt()) / (2.0 * pf * pf);
    let mut upper = round_up(&from_f64(formula).expect("finite"), 60);
    let mut bump = Rational::new(1.into(), (1u64 << 52).into()) * &upper;
    // γ ≤ U  ⟺  r²(r²+4ρ²) ≤ (2ρ²(U−1) − r²)²  with the right side base ≥ 0
    let holds = |u: &Rational| {
        let base = Rational::from_integer(2.into()) * rho * rho * (u - Rational::one()) - r * r;
        base >= Rational::zero() && r * r * (r * r + Rational::from_integer(4.into()) * rho * rho) <= &base * &base
    };
    while !holds(&upper) {
        upper += &bump;
        bump = &bump * Rational::from_integer(2.into());
    }
    (upper, formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::ratio;

    #[test]
    fn laplace_grade() {
        let c = certify_named(&NamedKind::Lap { sigma: Rational::one() }, &Rational::one()).unwrap();
        assert_eq!(c.grade_exact, Grade::from_eps(Rational::one(), Rational::zero()).unwrap());
        assert_eq!(c.cross_checks.len(), CROSS_CHECK_PAIRS);
    }

    #[test]
    fn cauchy_grade() {
        let c = certify_named(&NamedKind::Cauchy { rho: Rational::one() }, &Rational::one()).unwrap();
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((c.formula_gamma.unwrap() - golden).abs() < 1e-12);
        let bound = c.grade_exact.gamma().to_f64();
        assert!(bound >= golden && bound - golden < 1e-12);
    }

    #[test]
    fn gauss_side_conditions() {
        let g = |sigma: i64| NamedKind::Gauss {
            sigma: Rational::from_integer(sigma.into()),
            gamma: ExpNum::exp(ratio(1, 2)),
            delta: ratio(1, 100_000),
            variant: GaussVariant::Main,
        };
        assert!(certify_named(&g(10), &Rational::one()).is_ok());
        assert!(matches!(certify_named(&g(9), &Rational::one()), Err(CertifyError::SideConditionViolated(_))));
        let too_big = NamedKind::Gauss {
            sigma: Rational::from_integer(10.into()),
            gamma: ExpNum::exp(Rational::one()),
            delta: ratio(1, 100_000),
            variant: GaussVariant::Main,
        };
        assert!(certify_named(&too_big, &Rational::one()).is_err());
    }
}
