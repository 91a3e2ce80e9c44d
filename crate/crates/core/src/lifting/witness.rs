//! Witness lifting `Ψ^♯(γ,δ)`: a pair of joint subdistributions supported on
//! `Ψ` with prescribed marginals and skew distance at most `δ`.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::simplex::feasible_point;
use super::Relation;
use crate::grade::Grade;
use crate::measure::SubDist;
use crate::num::{ExpNum, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessPair<P: Ord> {
    pub d_l: SubDist<(P, P)>,
    pub d_r: SubDist<(P, P)>,
}

fn lower(x: &ExpNum) -> Rational {
    x.as_rational().unwrap_or_else(|| x.enclosure(96).0)
}

/// Searches for witnesses over pairs of `Ψ` drawn from `supp(d1) ∪ supp(d2)`.
/// Irrational grade components are rounded down, so a returned witness is
/// always valid for `g`.
pub fn witness_search<P>(d1: &SubDist<P>, d2: &SubDist<P>, psi: &Relation<P>, g: &Grade) -> Option<WitnessPair<P>>
where
    P: Ord + Clone + Send + Sync + 'static,
{
    let gamma = lower(g.gamma());
    let delta = lower(g.delta());
    let carrier: Vec<&P> = d1.support().chain(d2.support()).collect::<BTreeSet<_>>().into_iter().collect();
    let pairs: Vec<(usize, usize)> = (0..carrier.len())
        .flat_map(|i| (0..carrier.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| psi.related(carrier[i], carrier[j]))
        .collect();
    let np = pairs.len();
    if np == 0 {
        return (d1.is_empty() && d2.is_empty()).then(|| WitnessPair { d_l: SubDist::zero(), d_r: SubDist::zero() });
    }
    // columns: L_p, R_p, s_p, t_p, u_p, v_p for each pair, then two slack columns
    let (l, r, s, t, u, v) = (0, np, 2 * np, 3 * np, 4 * np, 5 * np);
    let cols = 6 * np + 2;
    let one = Rational::one();
    let mut a: Vec<Vec<Rational>> = Vec::new();
    let mut b: Vec<Rational> = Vec::new();
    let blank = || vec![Rational::zero(); cols];
    for (c, point) in carrier.iter().enumerate() {
        let mut row = blank();
        for (k, &(i, _)) in pairs.iter().enumerate() {
            if i == c {
                row[l + k] = one.clone();
            }
        }
        a.push(row);
        b.push(d1.weight(point));
        let mut row = blank();
        for (k, &(_, j)) in pairs.iter().enumerate() {
            if j == c {
                row[r + k] = one.clone();
            }
        }
        a.push(row);
        b.push(d2.weight(point));
    }
    for k in 0..np {
        // L - γR - s + u = 0
        let mut row = blank();
        row[l + k] = one.clone();
        row[r + k] = -gamma.clone();
        row[s + k] = -one.clone();
        row[u + k] = one.clone();
        a.push(row);
        b.push(Rational::zero());
        // R - γL - t + v = 0
        let mut row = blank();
        row[r + k] = one.clone();
        row[l + k] = -gamma.clone();
        row[t + k] = -one.clone();
        row[v + k] = one.clone();
        a.push(row);
        b.push(Rational::zero());
    }
    for (base, slack) in [(s, cols - 2), (t, cols - 1)] {
        let mut row = blank();
        for k in 0..np {
            row[base + k] = one.clone();
        }
        row[slack] = one.clone();
        a.push(row);
        b.push(delta.clone());
    }
    let x = feasible_point(&a, &b)?;
    let joint = |off: usize| {
        SubDist::from_weights(
            pairs.iter().enumerate().map(|(k, &(i, j))| ((carrier[i].clone(), carrier[j].clone()), x[off + k].clone())),
        )
        .expect("marginal masses are at most one")
    };
    Some(WitnessPair { d_l: joint(l), d_r: joint(r) })
}

impl<P: Ord + Clone> WitnessPair<P> {
    /// Re-checks the defining conditions exactly.
    pub fn verify(&self, d1: &SubDist<P>, d2: &SubDist<P>, psi: &Relation<P>, g: &Grade) -> bool
    where
        P: Send + Sync + 'static,
    {
        let on_psi = |d: &SubDist<(P, P)>| d.support().all(|(x, y)| psi.related(x, y));
        let first = self.d_l.map(|(x, _)| x.clone());
        let second = self.d_r.map(|(_, y)| y.clone());
        on_psi(&self.d_l)
            && on_psi(&self.d_r)
            && &first == d1
            && &second == d2
            && super::skew_distance(&self.d_l, &self.d_r, g.gamma()) <= *g.delta()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::ratio;

    #[test]
    fn diagonal_witness() {
        let d = SubDist::from_weights([("a", ratio(1, 3)), ("b", ratio(2, 3))]).unwrap();
        let w = witness_search(&d, &d, &Relation::Eq, &Grade::identity()).unwrap();
        assert!(w.verify(&d, &d, &Relation::Eq, &Grade::identity()));
        assert_eq!(w.d_l, d.map(|x| (*x, *x)));
    }

    #[test]
    fn empty_relation_is_infeasible() {
        let d1 = SubDist::dirac("a");
        let d2 = SubDist::dirac("b");
        let g = Grade::from_rationals(ratio(100, 1), ratio(1, 2)).unwrap();
        assert!(witness_search(&d1, &d2, &Relation::empty(), &g).is_none());
    }
}
