//! Certification of a mechanism instance through three window conditions:
//! normalizer bounds, the density ratio bound on the window and the tail mass
//! outside it.

use serde::Serialize;
use thiserror::Error;

use super::{Family, Mechanism};
use crate::grade::{Grade, GradeRecord};

/// Error budget charged on closed-form tail probabilities.
pub const TAIL_ERROR_BUDGET: f64 = 1e-12;
/// Relative slack when comparing a ratio against `γ` in floating point.
pub const RATIO_SLACK: f64 = 1e-12;
pub const GRID_POINTS: usize = 100_000;
/// Half-width of the swept region, in units of the mechanism scale.
pub const GRID_SPAN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Window {
    Whole,
    /// `{b | b ≤ hi}`
    AtMost { hi: f64 },
    /// `{b | b ≥ lo}`
    AtLeast { lo: f64 },
    Interval { lo: f64, hi: f64 },
}

impl Window {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Window::Whole => (f64::NEG_INFINITY, f64::INFINITY),
            Window::AtMost { hi } => (f64::NEG_INFINITY, hi),
            Window::AtLeast { lo } => (lo, f64::INFINITY),
            Window::Interval { lo, hi } => (lo, hi),
        }
    }

    pub fn contains(&self, b: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= b && b <= hi
    }

    /// `f_a(ℝ ∖ Z)`.
    pub fn outside_mass(&self, m: &Mechanism, a: f64) -> f64 {
        let (lo, hi) = self.bounds();
        m.cdf_below(a, lo) + m.sf(a, hi)
    }
}

impl Mechanism {
    fn cdf_below(&self, a: f64, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            0.0
        } else {
            self.cdf(a, x)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertStatus {
    Analytic,
    GridVerified { points: usize, max_ratio: f64, analytic_sup: f64, residual: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub mechanism: String,
    pub family: Family,
    /// Adjacency radius of the inputs, when the certificate covers a family of pairs.
    pub r: Option<f64>,
    pub grade: GradeRecord,
    #[serde(skip)]
    pub grade_exact: Grade,
    /// Floating value of γ when the exact grade stores a rational upper bound.
    pub formula_gamma: Option<f64>,
    pub window: Window,
    pub window_note: String,
    pub tail_mass: f64,
    pub status: CertStatus,
    /// Grid checks of sampled input pairs backing an analytic certificate.
    pub cross_checks: Vec<CertStatus>,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Refusal {
    #[error("normalizer condition fails: normalizers {n_a} at a and {n_a2} at a'")]
    Normalizer { n_a: f64, n_a2: f64 },
    #[error("ratio condition fails at b = {b}: ratio {ratio} > {bound}")]
    Ratio { b: f64, ratio: f64, bound: f64 },
    #[error("tail condition fails: mass {mass} outside the window exceeds {delta}")]
    Tail { mass: f64, delta: f64 },
}

/// Result of a successful window check for one pair `(a, a′)`.
#[derive(Debug, Clone, Serialize)]
pub struct WindowCheck {
    pub gamma: f64,
    pub delta: f64,
    pub window: Window,
    pub tail_mass: f64,
    pub status: CertStatus,
}

/// Points where the log-ratio `b ↦ ln f(a,b) − ln f(a′,b)` may attain its
/// supremum, including limits at ±∞ (returned as infinite abscissae).
fn critical_points(m: &Mechanism, a: f64, a2: f64) -> Vec<f64> {
    let mut pts = vec![f64::NEG_INFINITY, f64::INFINITY];
    match m.family {
        Family::Laplace { .. } => pts.extend([a, a2]),
        Family::Gauss { .. } => {}
        Family::Cauchy { rho } => {
            // (b − a)(b − a′) = ρ²
            let d = a - a2;
            let disc = (d * d + 4.0 * rho * rho).sqrt();
            pts.extend([a + (-d + disc) / 2.0, a + (-d - disc) / 2.0]);
        }
    }
    pts
}

fn log_ratio_limit(m: &Mechanism, a: f64, a2: f64, b: f64) -> f64 {
    if b.is_finite() {
        return m.log_ratio(a, a2, b);
    }
    let dir = b.signum();
    match m.family {
        Family::Laplace { sigma } => dir * (a - a2) / sigma,
        Family::Gauss { .. } => {
            let slope = a - a2;
            if slope * dir > 0.0 {
                f64::INFINITY
            } else if slope == 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        Family::Cauchy { .. } => 0.0,
    }
}

/// Exact supremum of the log-ratio over the window, and a point attaining it.
pub fn analytic_sup(m: &Mechanism, a: f64, a2: f64, z: &Window) -> (f64, f64) {
    let (lo, hi) = z.bounds();
    let mut cands: Vec<f64> = critical_points(m, a, a2).into_iter().filter(|b| z.contains(*b)).collect();
    cands.extend([lo, hi]);
    let mut best = (f64::NEG_INFINITY, lo);
    for b in cands {
        let v = log_ratio_limit(m, a, a2, b);
        if v > best.0 {
            best = (v, b);
        }
    }
    best
}

/// Grid sweep of the log-ratio over the window clipped to `a, a′ ± 40·scale`.
/// Returns (max log-ratio, leftmost maximizer, points evaluated).
pub fn grid_sup(m: &Mechanism, a: f64, a2: f64, z: &Window, points: usize) -> (f64, f64, usize) {
    let (zl, zh) = z.bounds();
    let span = GRID_SPAN * m.scale();
    let lo = zl.max(a.min(a2) - span);
    let hi = zh.min(a.max(a2) + span);
    let mut pts: Vec<f64> = Vec::with_capacity(points + 8);
    if hi > lo {
        let step = (hi - lo) / (points.max(2) - 1) as f64;
        pts.extend((0..points).map(|k| lo + step * k as f64));
    } else if lo == hi {
        pts.push(lo);
    }
    pts.extend(critical_points(m, a, a2).into_iter().filter(|b| b.is_finite() && z.contains(*b)));
    let vals: Vec<f64> = pts.iter().map(|&b| m.log_ratio(a, a2, b)).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // leftmost point on the maximal plateau, up to rounding
    let at = pts
        .iter()
        .zip(&vals)
        .filter(|(_, v)| **v >= max - 1e-12 * max.abs().max(1.0))
        .map(|(b, _)| *b)
        .fold(f64::INFINITY, f64::min);
    (max, at, pts.len())
}

/// Checks the three conditions for one input pair and returns the conclusion
/// grade `(γγ′, δ)` on success.
pub fn certify_window(
    m: &Mechanism,
    a: f64,
    a2: f64,
    gamma: f64,
    gamma2: f64,
    delta: f64,
    z: Window,
) -> Result<WindowCheck, Refusal> {
    // normalizers
    let (n_a, n_a2) = (m.normalizer(), m.normalizer());
    if !(n_a2 / gamma2 > 0.0 && n_a2 / gamma2 <= n_a && n_a.is_finite()) {
        return Err(Refusal::Normalizer { n_a, n_a2 });
    }
    // ratio on the window
    let bound = gamma.ln();
    let (sup, at) = analytic_sup(m, a, a2, &z);
    let (gmax, gat, npts) = grid_sup(m, a, a2, &z, GRID_POINTS);
    let slack = RATIO_SLACK;
    if gmax > bound + slack {
        return Err(Refusal::Ratio { b: gat, ratio: gmax.exp(), bound: gamma });
    }
    if sup > bound + slack {
        return Err(Refusal::Ratio { b: at, ratio: sup.exp(), bound: gamma });
    }
    // tail
    let tail = z.outside_mass(m, a);
    let charged = if z == Window::Whole { 0.0 } else { tail + TAIL_ERROR_BUDGET };
    if charged > delta {
        return Err(Refusal::Tail { mass: tail, delta });
    }
    let residual = if sup.is_finite() { (sup.exp() - gmax.exp()).abs() } else { f64::INFINITY };
    Ok(WindowCheck {
        gamma: gamma * gamma2,
        delta,
        window: z,
        tail_mass: tail,
        status: CertStatus::GridVerified { points: npts, max_ratio: gmax.exp(), analytic_sup: sup.exp(), residual },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn laplace_within_radius() {
        let m = Mechanism::laplace(1.0).unwrap();
        let c = certify_window(&m, 0.0, 0.9, E, 1.0, 0.0, Window::Whole).unwrap();
        match c.status {
            CertStatus::GridVerified { max_ratio, residual, .. } => {
                assert!((max_ratio - 0.9f64.exp()).abs() < 1e-12);
                assert!(max_ratio < E);
                assert!(residual < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn laplace_outside_radius_is_refused_in_the_tail() {
        let m = Mechanism::laplace(1.0).unwrap();
        match certify_window(&m, 0.0, 1.5, E, 1.0, 0.0, Window::Whole) {
            Err(Refusal::Ratio { b, ratio, .. }) => {
                assert!(b <= -39.0, "{b}");
                assert!((ratio - 1.5f64.exp()).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gauss_half_line_window() {
        let (sigma, r, a, a2) = (10.0, 1.0, 1.0, 0.0);
        let m = Mechanism::gauss(sigma).unwrap();
        let lg = 0.5f64;
        let w = sigma * sigma * lg / r;
        // a′ ≤ a: the ratio grows with b, so the window is bounded above
        let z = Window::AtMost { hi: (a + a2) / 2.0 + w };
        let c = certify_window(&m, a, a2, lg.exp(), 1.0, 1e-5, z);
        assert!(c.is_ok(), "{c:?}");
        assert!(c.unwrap().tail_mass < 1e-5);
        assert!(certify_window(&m, a2, a, lg.exp(), 1.0, 1e-5, z).is_err());
        let mirrored = Window::AtLeast { lo: (a + a2) / 2.0 - w };
        assert!(certify_window(&m, a2, a, lg.exp(), 1.0, 1e-5, mirrored).is_ok());
    }

    #[test]
    fn cauchy_sup_matches_closed_form() {
        let m = Mechanism::cauchy(1.0).unwrap();
        let (sup, _) = analytic_sup(&m, 0.0, 1.0, &Window::Whole);
        let want = 1.0 + (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sup.exp() - want).abs() < 1e-12);
    }
}
