//! Noise mechanisms: densities, normalized probabilities, samplers and the
//! window-condition certifier.

pub mod exp;
pub mod named;
pub mod window;

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use thiserror::Error;

pub use exp::ExpMech;
pub use named::{certify_named, CertifyError, GaussVariant, NamedKind};
pub use window::{certify_window, Certificate, CertStatus, Refusal, Window};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Laplace { sigma: f64 },
    Gauss { sigma: f64 },
    Cauchy { rho: f64 },
}

/// A location family `f(a, b) = k · g(b − a)` with an explicit constant `k`.
///
/// The constant cancels in every normalized probability; it is kept so the
/// window certifier can be run on the unnormalized densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mechanism {
    pub family: Family,
    pub constant: f64,
}

impl Mechanism {
    /// Laplace with the constant `2/σ`.
    pub fn laplace(sigma: f64) -> Result<Self, DomainError> {
        check_scale(sigma)?;
        Ok(Self { family: Family::Laplace { sigma }, constant: 2.0 / sigma })
    }

    /// Laplace with the normalizing constant `1/(2σ)`.
    pub fn laplace_standard(sigma: f64) -> Result<Self, DomainError> {
        check_scale(sigma)?;
        Ok(Self { family: Family::Laplace { sigma }, constant: 1.0 / (2.0 * sigma) })
    }

    pub fn gauss(sigma: f64) -> Result<Self, DomainError> {
        check_scale(sigma)?;
        Ok(Self { family: Family::Gauss { sigma }, constant: 1.0 / (2.0 * PI * sigma * sigma).sqrt() })
    }

    pub fn cauchy(rho: f64) -> Result<Self, DomainError> {
        check_scale(rho)?;
        Ok(Self { family: Family::Cauchy { rho }, constant: rho / PI })
    }

    pub fn with_constant(self, constant: f64) -> Self {
        Self { constant, ..self }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Laplace { .. } => "lap",
            Family::Gauss { .. } => "gauss",
            Family::Cauchy { .. } => "cauchy",
        }
    }

    /// Scale used to size grids (σ, or ρ for Cauchy).
    pub fn scale(&self) -> f64 {
        match self.family {
            Family::Laplace { sigma } | Family::Gauss { sigma } => sigma,
            Family::Cauchy { rho } => rho,
        }
    }

    /// Unnormalized density `f(a, b)`.
    pub fn density(&self, a: f64, b: f64) -> f64 {
        self.constant * self.shape(b - a)
    }

    fn shape(&self, t: f64) -> f64 {
        match self.family {
            Family::Laplace { sigma } => (-t.abs() / sigma).exp(),
            Family::Gauss { sigma } => (-(t * t) / (2.0 * sigma * sigma)).exp(),
            Family::Cauchy { rho } => 1.0 / (t * t + rho * rho),
        }
    }

    /// `ln f(a, b) − ln f(a′, b)`, computed without under/overflow.
    pub fn log_ratio(&self, a: f64, a2: f64, b: f64) -> f64 {
        match self.family {
            Family::Laplace { sigma } => ((b - a2).abs() - (b - a).abs()) / sigma,
            Family::Gauss { sigma } => ((b - a2).powi(2) - (b - a).powi(2)) / (2.0 * sigma * sigma),
            Family::Cauchy { rho } => (((b - a2).powi(2) + rho * rho) / ((b - a).powi(2) + rho * rho)).ln(),
        }
    }

    /// `∫ f(a, −)` in closed form (independent of `a`).
    pub fn normalizer(&self) -> f64 {
        self.constant
            * match self.family {
                Family::Laplace { sigma } => 2.0 * sigma,
                Family::Gauss { sigma } => sigma * (2.0 * PI).sqrt(),
                Family::Cauchy { rho } => PI / rho,
            }
    }

    /// `f_a((−∞, x])`.
    pub fn cdf(&self, a: f64, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        let t = x - a;
        match self.family {
            Family::Laplace { sigma } => {
                if t < 0.0 {
                    0.5 * (t / sigma).exp()
                } else {
                    1.0 - 0.5 * (-t / sigma).exp()
                }
            }
            Family::Gauss { sigma } => 0.5 * erfc(-t / (sigma * std::f64::consts::SQRT_2)),
            Family::Cauchy { rho } => 0.5 + (t / rho).atan() / PI,
        }
    }

    /// `f_a((x, ∞))`, accurate in the upper tail.
    pub fn sf(&self, a: f64, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 0.0;
        }
        if x == f64::NEG_INFINITY {
            return 1.0;
        }
        let t = x - a;
        match self.family {
            Family::Laplace { sigma } => {
                if t > 0.0 {
                    0.5 * (-t / sigma).exp()
                } else {
                    1.0 - 0.5 * (t / sigma).exp()
                }
            }
            Family::Gauss { sigma } => 0.5 * erfc(t / (sigma * std::f64::consts::SQRT_2)),
            Family::Cauchy { rho } => 0.5 - (t / rho).atan() / PI,
        }
    }

    /// `f_a([lo, hi])`; endpoints may be infinite.
    pub fn normalized_prob(&self, a: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        // subtract in whichever tail keeps precision
        if lo - a > 0.0 {
            (self.sf(a, lo) - self.sf(a, hi)).max(0.0)
        } else {
            (self.cdf(a, hi) - self.cdf(a, lo)).max(0.0)
        }
    }

    /// Quantile function of `f_a`.
    pub fn quantile(&self, a: f64, u: f64) -> f64 {
        match self.family {
            Family::Laplace { sigma } => {
                if u < 0.5 {
                    a + sigma * (2.0 * u).ln()
                } else {
                    a - sigma * (2.0 * (1.0 - u)).ln()
                }
            }
            Family::Gauss { sigma } => {
                let n = Normal::new(a, sigma).expect("positive sigma");
                n.inverse_cdf(u)
            }
            Family::Cauchy { rho } => a + rho * (PI * (u - 0.5)).tan(),
        }
    }

    /// Inverse-CDF sample of `f_a`.
    pub fn sample<R: Rng + ?Sized>(&self, a: f64, rng: &mut R) -> f64 {
        // open interval (0, 1)
        let u = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        self.quantile(a, u)
    }
}

fn check_scale(s: f64) -> Result<(), DomainError> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(DomainError::NonPositiveScale(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_probabilities() {
        let lap = Mechanism::laplace(1.0).unwrap();
        assert_eq!(lap.normalized_prob(0.0, f64::NEG_INFINITY, 0.0), 0.5);
        let c = Mechanism::cauchy(1.0).unwrap();
        assert!((c.normalized_prob(0.0, -1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(Mechanism::gauss(0.0).is_err());
        assert!(Mechanism::cauchy(-1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in [Mechanism::laplace(2.0).unwrap(), Mechanism::gauss(1.5).unwrap(), Mechanism::cauchy(0.5).unwrap()] {
            for u in [0.001, 0.2, 0.5, 0.77, 0.999] {
                let x = m.quantile(1.0, u);
                assert!((m.cdf(1.0, x) - u).abs() < 1e-9, "{m:?} {u}");
            }
        }
    }

    #[test]
    fn normalizer_matches_constant() {
        for m in [Mechanism::laplace_standard(3.0).unwrap(), Mechanism::gauss(2.0).unwrap(), Mechanism::cauchy(4.0).unwrap()] {
            assert!((m.normalizer() - 1.0).abs() < 1e-12);
        }
        assert!((Mechanism::laplace(1.0).unwrap().normalizer() - 4.0).abs() < 1e-15);
    }
}
