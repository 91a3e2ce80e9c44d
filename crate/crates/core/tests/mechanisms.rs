use std::f64::consts::PI;
use std::sync::Arc;

use num_traits::{One, Zero};
use proptest::prelude::*;
use pwhile_dp::mechanisms::exp::ExpMech;
use pwhile_dp::mechanisms::named::{certify_named, GaussVariant, NamedKind};
use pwhile_dp::mechanisms::window::{certify_window, CertStatus, Window};
use pwhile_dp::mechanisms::Mechanism;
use pwhile_dp::num::rational::ratio;
use pwhile_dp::num::{ExpNum, Rational};
use pwhile_dp::semantics::sample::trial_rng;
use pwhile_dp::Grade;

fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn residual(s: &CertStatus) -> f64 {
    match s {
        CertStatus::GridVerified { residual, .. } => *residual,
        CertStatus::Analytic => 0.0,
    }
}

#[test]
fn laplace_grid_agrees_with_closed_form() {
    for sigma in [0.5, 1.0, 3.0] {
        let m = Mechanism::laplace(sigma).unwrap();
        for (a, a2) in [(0.0f64, 1.0), (2.0, 1.25), (-7.0, -7.5), (10.0, 10.0)] {
            let want = (a - a2).abs() / sigma;
            let c = certify_window(&m, a, a2, want.exp() * (1.0 + 1e-12), 1.0, 0.0, Window::Whole).unwrap();
            let CertStatus::GridVerified { max_ratio, residual, .. } = c.status else { unreachable!() };
            assert!(residual < 1e-9, "{sigma} {a} {a2}: {residual}");
            assert!((max_ratio.ln() - want).abs() < 1e-9);
        }
    }
    let cert = certify_named(&NamedKind::Lap { sigma: ratio(1, 2) }, &rat(1)).unwrap();
    assert_eq!(cert.grade_exact, Grade::from_eps(rat(2), Rational::zero()).unwrap());
    assert!(cert.cross_checks.iter().all(|s| residual(s) < 1e-9));
}

/// Golden-section refinement of `b ↦ f(a,b)/f(a′,b)` for the Cauchy kernel,
/// started from a coarse scan.
fn cauchy_sup_oracle(rho: f64, a: f64, a2: f64) -> f64 {
    let ratio = |b: f64| (1.0 + ((b - a2) / rho).powi(2)) / (1.0 + ((b - a) / rho).powi(2));
    let (lo, hi) = (a.min(a2) - 50.0 * rho, a.max(a2) + 50.0 * rho);
    let n = 200_000;
    let step = (hi - lo) / n as f64;
    let best = (0..=n).map(|k| lo + step * k as f64).fold(lo, |bb, b| if ratio(b) > ratio(bb) { b } else { bb });
    let (mut l, mut r) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (m1, m2) = (r - g * (r - l), l + g * (r - l));
        if ratio(m1) < ratio(m2) {
            l = m1;
        } else {
            r = m2;
        }
    }
    ratio((l + r) / 2.0).max(1.0)
}

#[test]
fn cauchy_sup_meets_formula_from_below() {
    for (r, rho) in [(1, 1), (1, 2), (2, 1), (3, 5), (1, 10)] {
        let (rf, pf) = (r as f64, rho as f64);
        let formula = 1.0 + (rf * rf + rf * (rf * rf + 4.0 * pf * pf).sqrt()) / (2.0 * pf * pf);
        let oracle = cauchy_sup_oracle(pf, 0.0, rf);
        assert!(oracle <= formula * (1.0 + 1e-12), "r {r} rho {rho}: {oracle} > {formula}");
        assert!(formula - oracle < 1e-6, "r {r} rho {rho}: {oracle} vs {formula}");
        let cert = certify_named(&NamedKind::Cauchy { rho: rat(rho) }, &rat(r)).unwrap();
        let g = cert.grade_exact.gamma().to_f64();
        assert!(g >= formula && g - formula < 1e-6);
        for s in &cert.cross_checks {
            let CertStatus::GridVerified { max_ratio, .. } = s else { unreachable!() };
            assert!(*max_ratio <= formula * (1.0 + 1e-12));
        }
    }
}

/// Standard normal upper tail by composite Simpson on `[z, z+40]`.
fn normal_tail(z: f64) -> f64 {
    let n = 400_000;
    let h = 40.0 / n as f64;
    let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
    let mut s = phi(z) + phi(z + 40.0);
    for k in 1..n {
        s += phi(z + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gauss_window_tail_stays_under_delta() {
    for (sigma, r, eps, delta) in [(10, 1, ratio(1, 2), ratio(1, 100_000)), (30, 2, ratio(1, 2), ratio(1, 1_000_000)), (8, 1, ratio(9, 10), ratio(1, 1000))] {
        for variant in [GaussVariant::Main, GaussVariant::Relaxed] {
            let kind = NamedKind::Gauss { sigma: rat(sigma), gamma: ExpNum::exp(eps.clone()), delta: delta.clone(), variant };
            let cert = certify_named(&kind, &rat(r)).unwrap();
            let (sf, rf, lg, d) = (sigma as f64, r as f64, pwhile_dp::num::rational::to_f64(&eps), pwhile_dp::num::rational::to_f64(&delta));
            let w = sf * sf * lg / rf;
            let m = Mechanism::gauss(sf).unwrap();
            for (a, a2) in [(0.0, rf), (rf, 0.0), (3.0, 3.0 - rf / 2.0)] {
                let mid = (a + a2) / 2.0;
                let (z, tail) = match variant {
                    GaussVariant::Main => (
                        Window::Interval { lo: mid - w, hi: mid + w },
                        normal_tail((mid + w - a) / sf) + normal_tail((a - mid + w) / sf),
                    ),
                    GaussVariant::Relaxed if a2 <= a => (Window::AtMost { hi: mid + w }, normal_tail((mid + w - a) / sf)),
                    GaussVariant::Relaxed => (Window::AtLeast { lo: mid - w }, normal_tail((a - mid + w) / sf)),
                };
                assert!(tail + 1e-12 < d, "{sigma} {r} {variant:?}: tail {tail}");
                let c = certify_window(&m, a, a2, lg.exp(), 1.0, d, z).unwrap();
                assert!((c.tail_mass - tail).abs() < 1e-12 + 1e-9 * tail, "{} vs {tail}", c.tail_mass);
            }
            assert_eq!(cert.grade_exact, Grade::new(ExpNum::exp(eps.clone()), ExpNum::rational(delta.clone())).unwrap());
        }
    }
}

fn median_mech(eps: Rational) -> ExpMech {
    let inputs: Vec<Vec<i64>> = (0..4).flat_map(|x| (0..4).map(move |y| vec![x, y])).collect();
    ExpMech::new(
        eps,
        vec![0, 1, 2, 3, 4, 5, 6],
        vec![rat(1); 7],
        Arc::new(|a: &[i64], b: i64| -rat((a.iter().sum::<i64>() - b).abs())),
        rat(1),
        inputs,
    )
    .unwrap()
}

#[test]
fn exponential_table_obeys_its_grade() {
    for (eps, r) in [(ratio(1, 4), 1), (ratio(1, 2), 1), (rat(1), 2)] {
        let mech = median_mech(eps.clone());
        let cert = certify_named(&NamedKind::Exp { mech: mech.clone() }, &rat(r)).unwrap();
        let bound = rat(2) * &eps * rat(r);
        assert_eq!(cert.grade_exact, Grade::from_eps(bound.clone(), Rational::zero()).unwrap());
        let gamma = pwhile_dp::num::rational::to_f64(&bound).exp();
        // every event of every pair of inputs within distance r
        for a in &mech.inputs {
            for a2 in &mech.inputs {
                let d: i64 = a.iter().zip(a2).map(|(x, y)| (x - y).abs()).sum();
                if d > r {
                    continue;
                }
                let oracle = |inp: &[i64]| -> Vec<f64> {
                    let w: Vec<f64> = (0..7)
                        .map(|b| (pwhile_dp::num::rational::to_f64(&eps) * -((inp.iter().sum::<i64>() - b).abs() as f64)).exp())
                        .collect();
                    let z: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / z).collect()
                };
                let (p, p2) = (oracle(a), oracle(a2));
                let got: Vec<f64> = mech.probabilities(a).into_iter().map(|(_, x)| x).collect();
                assert!(p.iter().zip(&got).all(|(x, y)| (x - y).abs() < 1e-12));
                for s in 0u32..(1 << 7) {
                    let ev = |q: &[f64]| (0..7).filter(|i| s >> i & 1 == 1).map(|i| q[i]).sum::<f64>();
                    assert!(ev(&p) <= gamma * ev(&p2) * (1.0 + 1e-12));
                }
            }
        }
    }
    let mut bad = median_mech(ratio(1, 2));
    bad.c = ratio(1, 2);
    assert!(certify_named(&NamedKind::Exp { mech: bad }, &Rational::one()).is_err());
}

/// Kolmogorov–Smirnov statistic of `xs` against `cdf`.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[test]
fn samplers_pass_ks() {
    let n = 50_000;
    let crit = ks_critical(n, 0.001);
    let draw = |m: &Mechanism, a: f64, seed: u64| (0..n).map(|i| m.sample(a, &mut trial_rng(seed, i as u64))).collect::<Vec<_>>();
    let lap = |s: f64, a: f64| move |x: f64| if x < a { 0.5 * ((x - a) / s).exp() } else { 1.0 - 0.5 * (-(x - a) / s).exp() };
    let cau = |rho: f64, a: f64| move |x: f64| 0.5 + ((x - a) / rho).atan() / PI;
    let gau = |s: f64, a: f64| move |x: f64| {
        let z = (x - a) / s;
        if z >= 0.0 { 1.0 - normal_tail_fast(z) } else { normal_tail_fast(-z) }
    };
    let cases: Vec<(&str, f64)> = vec![
        ("lap", ks(draw(&Mechanism::laplace(2.0).unwrap(), 1.0, 1), lap(2.0, 1.0))),
        ("cauchy", ks(draw(&Mechanism::cauchy(0.5).unwrap(), -3.0, 2), cau(0.5, -3.0))),
        ("gauss", ks(draw(&Mechanism::gauss(3.0).unwrap(), 4.0, 3), gau(3.0, 4.0))),
    ];
    for (name, d) in cases {
        println!("{name}: D = {d:.5} (critical {crit:.5})");
        assert!(d < crit, "{name}: {d} >= {crit}");
    }
}

/// Upper normal tail by Simpson on a coarser grid, fine for KS at 1e-3.
fn normal_tail_fast(z: f64) -> f64 {
    let n = 2000;
    let h = 12.0 / n as f64;
    let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
    let mut s = phi(z) + phi(z + 12.0);
    for k in 1..n {
        s += phi(z + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cauchy_certificate_bounds_sampled_ratio(r in 1i64..4, rho in 1i64..6, a in -20i64..20) {
        let cert = certify_named(&NamedKind::Cauchy { rho: rat(rho) }, &rat(r)).unwrap();
        let g = cert.grade_exact.gamma().to_f64();
        let oracle = cauchy_sup_oracle(rho as f64, a as f64, (a + r) as f64);
        prop_assert!(oracle <= g);
    }

    #[test]
    fn laplace_grade_is_radius_over_scale(r in 1i64..5, s in 1i64..5) {
        let cert = certify_named(&NamedKind::Lap { sigma: rat(s) }, &rat(r)).unwrap();
        prop_assert_eq!(cert.grade_exact, Grade::from_eps(ratio(r, s), Rational::zero()).unwrap());
    }
}
