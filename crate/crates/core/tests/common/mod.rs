#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use pwhile_dp::SubDist;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Subdistribution over `0..points` from integer weights, total mass `keep/den` of the raw weights.
pub fn dist_from(weights: &[u32], slack: u32) -> SubDist<u8> {
    let total: u32 = weights.iter().sum::<u32>() + slack;
    if total == 0 {
        return SubDist::zero();
    }
    SubDist::from_weights(weights.iter().enumerate().map(|(i, w)| (i as u8, q(*w as i64, total as i64)))).unwrap()
}

pub fn arb_dist(max_points: usize) -> impl Strategy<Value = SubDist<u8>> {
    (prop::collection::vec(0u32..6, 1..=max_points), 0u32..3).prop_map(|(w, s)| dist_from(&w, s))
}

pub fn arb_full_dist(max_points: usize) -> impl Strategy<Value = SubDist<u8>> {
    prop::collection::vec(1u32..6, 1..=max_points).prop_map(|w| dist_from(&w, 0))
}

/// Brute force `sup_A ν1(A) − γ·ν2(Φ(A))` over all subsets of `supp(ν1)`, clipped at zero.
/// With that, `(ν1, ν2) ∈ G^(γ,δ)Φ` iff the value is at most `δ`.
pub fn min_delta<P: Ord + Clone>(nu1: &SubDist<P>, nu2: &SubDist<P>, rel: &dyn Fn(&P, &P) -> bool, gamma: &Q) -> Q {
    let xs: Vec<(P, Q)> = nu1.iter().map(|(p, w)| (p.clone(), w.clone())).collect();
    let ys: Vec<(P, Q)> = nu2.iter().map(|(p, w)| (p.clone(), w.clone())).collect();
    let mut best = Q::zero();
    for mask in 0u32..(1 << xs.len()) {
        let chosen: Vec<&(P, Q)> = xs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x).collect();
        let lhs: Q = chosen.iter().map(|(_, w)| w.clone()).sum();
        let rhs: Q = ys.iter().filter(|(y, _)| chosen.iter().any(|(x, _)| rel(x, y))).map(|(_, w)| w.clone()).sum();
        let gap = lhs - gamma * rhs;
        if gap > best {
            best = gap;
        }
    }
    best
}

pub fn oracle_member<P: Ord + Clone>(
    nu1: &SubDist<P>,
    nu2: &SubDist<P>,
    rel: &dyn Fn(&P, &P) -> bool,
    gamma: &Q,
    delta: &Q,
    symmetric: bool,
) -> bool {
    if min_delta(nu1, nu2, rel, gamma) > *delta {
        return false;
    }
    !symmetric || min_delta(nu2, nu1, &|a: &P, b: &P| rel(b, a), gamma) <= *delta
}

pub fn one() -> Q {
    Q::one()
}
