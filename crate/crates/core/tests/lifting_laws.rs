mod common;

use std::collections::BTreeSet;

use common::*;
use num_traits::{One, Zero};
use proptest::prelude::*;
use pwhile_dp::lifting::{
    forall_eq_combine, lifting_member, lifting_member_unnormalized, skew_distance, witness_search, Relation,
};
use pwhile_dp::num::ExpNum;
use pwhile_dp::{Grade, SubDist};

fn grade(gamma: &Q, delta: &Q) -> Grade {
    Grade::from_rationals(gamma.clone(), delta.clone()).unwrap()
}

fn arb_gamma() -> impl Strategy<Value = Q> {
    (0i64..8).prop_map(|k| q(4 + k, 4))
}

fn arb_rel(points: u8) -> impl Strategy<Value = BTreeSet<(u8, u8)>> {
    prop::collection::btree_set((0..points, 0..points), 0..(points as usize * 2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn membership_matches_subset_oracle(
        a in arb_dist(8), b in arb_dist(8), rel in arb_rel(8), gamma in arb_gamma(), dn in 0i64..5, sym in any::<bool>()
    ) {
        let delta = q(dn, 10);
        let set = rel.clone();
        let want = oracle_member(&a, &b, &|x, y| set.contains(&(*x, *y)), &gamma, &delta, sym);
        let got = lifting_member(&a, &b, &Relation::Explicit(rel), &grade(&gamma, &delta), sym).unwrap();
        prop_assert_eq!(got.holds(), want);
        if let Some(v) = got.violation() {
            prop_assert!(v.lhs > v.rhs);
        }
    }

    #[test]
    fn unit_law(x in 0u8..8, y in 0u8..8, rel in arb_rel(8)) {
        let mut rel = rel;
        rel.insert((x, y));
        let m = lifting_member(&SubDist::dirac(x), &SubDist::dirac(y), &Relation::Explicit(rel), &Grade::identity(), false).unwrap();
        prop_assert!(m.holds());
    }

    #[test]
    fn grade_monotonicity(
        a in arb_dist(8), b in arb_dist(8), rel in arb_rel(8), gamma in arb_gamma(), extra_g in 0i64..4, extra_d in 0i64..4
    ) {
        let set = rel.clone();
        let delta = min_delta(&a, &b, &|x, y| set.contains(&(*x, *y)), &gamma);
        let r = Relation::Explicit(rel);
        prop_assert!(lifting_member(&a, &b, &r, &grade(&gamma, &delta), false).unwrap().holds());
        let bigger = grade(&(&gamma + q(extra_g, 3)), &(&delta + q(extra_d, 7)));
        prop_assert!(lifting_member(&a, &b, &r, &bigger, false).unwrap().holds());
        if delta > Q::zero() {
            let smaller = grade(&gamma, &(&delta - q(1, 1000).min(delta.clone())));
            prop_assert!(!lifting_member(&a, &b, &r, &smaller, false).unwrap().holds());
        }
    }

    #[test]
    fn functoriality(a in arb_dist(8), b in arb_dist(8), rel in arb_rel(8), gamma in arb_gamma(), modulus in 1u8..5) {
        let set = rel.clone();
        let delta = min_delta(&a, &b, &|x, y| set.contains(&(*x, *y)), &gamma);
        let f = |x: &u8| x % modulus;
        let image: BTreeSet<(u8, u8)> = rel.iter().map(|(x, y)| (f(x), f(y))).collect();
        let m = lifting_member(&a.map(f), &b.map(f), &Relation::Explicit(image), &grade(&gamma, &delta), false).unwrap();
        prop_assert!(m.holds());
    }

    #[test]
    fn multiplication_law(
        inner in prop::collection::vec((arb_dist(4), arb_dist(4)), 1..4),
        outer_w in prop::collection::vec((1u32..5, 1u32..5), 3),
        rel in arb_rel(4),
        g_in in arb_gamma(),
        g_out in arb_gamma(),
    ) {
        let set = rel.clone();
        let phi = |x: &u8, y: &u8| set.contains(&(*x, *y));
        let d_in = inner
            .iter()
            .map(|(n1, n2)| min_delta(n1, n2, &phi, &g_in))
            .fold(Q::zero(), |a, b| if b > a { b } else { a });
        let k = inner.len();
        let tot1: u32 = outer_w[..k].iter().map(|w| w.0).sum();
        let tot2: u32 = outer_w[..k].iter().map(|w| w.1).sum();
        let xi1 = SubDist::from_weights(inner.iter().zip(&outer_w).map(|((n1, _), w)| (n1.clone(), q(w.0 as i64, tot1 as i64)))).unwrap();
        let xi2 = SubDist::from_weights(inner.iter().zip(&outer_w).map(|((_, n2), w)| (n2.clone(), q(w.1 as i64, tot2 as i64)))).unwrap();
        let psi = |n1: &SubDist<u8>, n2: &SubDist<u8>| min_delta(n1, n2, &phi, &g_in) <= d_in;
        let d_out = min_delta(&xi1, &xi2, &psi, &g_out);
        let flat1 = SubDist::flatten(&xi1);
        let flat2 = SubDist::flatten(&xi2);
        let g = grade(&(&g_in * &g_out), &(&d_in + &d_out));
        prop_assert!(lifting_member(&flat1, &flat2, &Relation::Explicit(rel), &g, false).unwrap().holds());
    }

    #[test]
    fn codensity_direction(
        a in arb_dist(6), b in arb_dist(6), rel in arb_rel(6), gamma in arb_gamma(),
        fs in prop::collection::vec(prop::collection::vec(0i64..5, 6), 1..5),
    ) {
        let set = rel.clone();
        let delta = min_delta(&a, &b, &|x, y| set.contains(&(*x, *y)), &gamma);
        // g(y) = max over related x of f(x), else 0: the least g with f ≤ g on Φ
        for f in fs {
            let fv = |x: &u8| q(f[*x as usize], 4);
            let gv = |y: &u8| rel.iter().filter(|(_, y2)| y2 == y).map(|(x, _)| fv(x)).fold(Q::zero(), |m, v| if v > m { v } else { m });
            let lhs: Q = a.iter().map(|(x, w)| fv(x) * w).sum();
            let rhs: Q = b.iter().map(|(y, w)| gv(y) * w).sum();
            // step functions valued in [0, 1]
            prop_assert!(lhs <= &gamma * rhs + &delta);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn skew_matches_subset_sup(a in arb_dist(10), b in arb_dist(10), gamma in arb_gamma()) {
        let eq = |x: &u8, y: &u8| x == y;
        let want = {
            let l = min_delta(&a, &b, &eq, &gamma);
            let r = min_delta(&b, &a, &eq, &gamma);
            if l > r { l } else { r }
        };
        prop_assert_eq!(skew_distance(&a, &b, &ExpNum::rational(gamma)), ExpNum::rational(want));
    }

    #[test]
    fn witness_implies_symmetric_member(a in arb_dist(4), b in arb_dist(4), rel in arb_rel(5), gamma in arb_gamma(), dn in 0i64..6) {
        let g = grade(&gamma, &q(dn, 10));
        let r = Relation::Explicit(rel);
        if let Some(w) = witness_search(&a, &b, &r, &g) {
            prop_assert!(w.verify(&a, &b, &r, &g));
            prop_assert!(lifting_member(&a, &b, &r, &g, true).unwrap().holds());
        }
    }

    #[test]
    fn eq_three_way(a in arb_dist(5), b in arb_dist(5), gamma in arb_gamma(), dn in 0i64..6) {
        let g = grade(&gamma, &q(dn, 20));
        let member = lifting_member(&a, &b, &Relation::Eq, &g, true).unwrap().holds();
        let skew = skew_distance(&a, &b, g.gamma()) <= *g.delta();
        let witness = witness_search(&a, &b, &Relation::Eq, &g).is_some();
        prop_assert_eq!(member, skew);
        prop_assert_eq!(member, witness);
    }

    #[test]
    fn forall_eq_combination(
        table1 in prop::collection::vec(prop::collection::vec(0u32..4, 2), 2..4),
        table2 in prop::collection::vec(prop::collection::vec(0u32..4, 2), 2..4),
        gamma in arb_gamma(),
    ) {
        let k = table1.len().min(table2.len());
        let build = |t: &[Vec<u32>]| {
            let total: u32 = t[..k].iter().flatten().sum::<u32>() + 1;
            SubDist::from_weights(t[..k].iter().enumerate().flat_map(|(i, row)| {
                row.iter().enumerate().map(move |(j, w)| (((i as u8), j as u8), q(*w as i64, total as i64)))
            })).unwrap()
        };
        let (nu1, nu2) = (build(&table1), build(&table2));
        let per: Vec<(u8, Grade)> = (0..k as u8)
            .map(|i| {
                let rel = |a: &(u8, u8), b: &(u8, u8)| a.0 != i || b.0 == i;
                (i, grade(&gamma, &min_delta(&nu1, &nu2, &rel, &gamma)))
            })
            .collect();
        let report = forall_eq_combine(&per, &nu1, &nu2).unwrap();
        prop_assert!(report.per_index.iter().all(|b| *b));
        prop_assert!(report.combined);
        let total: Q = per.iter().map(|(_, g)| g.delta().as_rational().unwrap()).sum();
        prop_assert_eq!(report.grade.delta().as_rational().unwrap(), total);
    }
}

fn rr_table(p: &Q, truth: u8) -> SubDist<u8> {
    SubDist::from_weights([(truth, p.clone()), (1 - truth, Q::one() - p)]).unwrap()
}

#[test]
fn dp_inequality_matches_lifting_on_randomized_response() {
    for (num, den) in [(1, 2), (3, 5), (2, 3), (3, 4), (9, 10)] {
        let p = q(num, den);
        let (c0, c1) = (rr_table(&p, 0), rr_table(&p, 1));
        for gamma in [q(1, 1), q(3, 2), q(2, 1), q(3, 1), q(9, 1)] {
            for delta in [q(0, 1), q(1, 10)] {
                let events: [&[u8]; 4] = [&[], &[0], &[1], &[0, 1]];
                let dp = events.iter().all(|ev| {
                    let pr = |d: &SubDist<u8>| -> Q { ev.iter().map(|x| d.weight(x)).sum() };
                    pr(&c0) <= &gamma * pr(&c1) + &delta && pr(&c1) <= &gamma * pr(&c0) + &delta
                });
                let lift = lifting_member(&c0, &c1, &Relation::Eq, &grade(&gamma, &delta), true).unwrap().holds();
                assert_eq!(dp, lift, "p={p} gamma={gamma} delta={delta}");
            }
        }
    }
}

#[test]
fn unnormalized_weights_match_normalized() {
    let w1 = [(0u8, ExpNum::exp(q(1, 2))), (1, ExpNum::one())];
    let w2 = [(0u8, ExpNum::one()), (1, ExpNum::exp(q(1, 2)))];
    let (w1, w2) = (w1.into_iter().collect(), w2.into_iter().collect());
    // equal normalizers, so the worst ratio is e^{1/2}
    let tight = Grade::new(ExpNum::exp(q(1, 2)), ExpNum::zero()).unwrap();
    let short = Grade::new(ExpNum::exp(q(49, 100)), ExpNum::zero()).unwrap();
    assert!(lifting_member_unnormalized(&w1, &w2, &Relation::Eq, &tight, true).unwrap().holds());
    assert!(!lifting_member_unnormalized(&w1, &w2, &Relation::Eq, &short, true).unwrap().holds());
}
