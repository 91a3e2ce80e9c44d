//! Finite-support subprobability distributions: the sub-Giry monad restricted
//! to finitely many atoms, with exact rational weights.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::num::{format_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("chain is not monotone: element {index} does not dominate its predecessor")]
    ChainNotMonotone { index: usize },
    #[error("total mass {0} exceeds 1")]
    MassExceedsOne(String),
    #[error("negative weight")]
    NegativeWeight,
}

/// A subprobability distribution with finite support.
///
/// Weights are strictly positive and sum to at most one. Points are kept in
/// their `Ord` order, which is the canonical order used for deduplication.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubDist<P: Ord> {
    atoms: BTreeMap<P, Rational>,
}

impl<P: Ord + Clone> SubDist<P> {
    /// The null measure (the least element of the order).
    pub fn zero() -> Self {
        Self { atoms: BTreeMap::new() }
    }

    pub fn dirac(point: P) -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(point, Rational::one());
        Self { atoms }
    }

    /// Builds a distribution, merging repeated points and dropping zero weights.
    pub fn from_weights<I>(pairs: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (P, Rational)>,
    {
        let d = Self::from_weights_unchecked(pairs)?;
        if d.mass() > Rational::one() {
            return Err(MeasureError::MassExceedsOne(format_rational(&d.mass())));
        }
        Ok(d)
    }

    /// Like [`from_weights`](Self::from_weights) without the mass bound; used
    /// for intermediate sums inside a bind.
    fn from_weights_unchecked<I>(pairs: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (P, Rational)>,
    {
        let mut atoms: BTreeMap<P, Rational> = BTreeMap::new();
        for (p, w) in pairs {
            if w < Rational::zero() {
                return Err(MeasureError::NegativeWeight);
            }
            if w.is_zero() {
                continue;
            }
            *atoms.entry(p).or_insert_with(Rational::zero) += w;
        }
        Ok(Self { atoms })
    }

    pub fn uniform<I: IntoIterator<Item = P>>(points: I) -> Self {
        let pts: Vec<P> = points.into_iter().collect();
        if pts.is_empty() {
            return Self::zero();
        }
        let w = Rational::new(1.into(), (pts.len() as i64).into());
        Self::from_weights(pts.into_iter().map(|p| (p, w.clone()))).expect("uniform weights")
    }

    pub fn mass(&self) -> Rational {
        self.atoms.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    pub fn weight(&self, point: &P) -> Rational {
        self.atoms.get(point).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &P> {
        self.atoms.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, &Rational)> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Kleisli extension: `result(A) = Σ_x ν(x)·f(x)(A)`.
    pub fn bind<Q, F>(&self, mut f: F) -> SubDist<Q>
    where
        Q: Ord + Clone,
        F: FnMut(&P) -> SubDist<Q>,
    {
        let mut atoms: BTreeMap<Q, Rational> = BTreeMap::new();
        for (x, w) in &self.atoms {
            for (y, v) in f(x).atoms {
                *atoms.entry(y).or_insert_with(Rational::zero) += w * v;
            }
        }
        SubDist { atoms }
    }

    /// Pushforward along a function.
    pub fn map<Q, F>(&self, mut f: F) -> SubDist<Q>
    where
        Q: Ord + Clone,
        F: FnMut(&P) -> Q,
    {
        self.bind(|x| SubDist::dirac(f(x)))
    }

    /// Double strength: the product measure `ν1 ⊗ ν2`.
    pub fn product<Q: Ord + Clone>(&self, other: &SubDist<Q>) -> SubDist<(P, Q)> {
        let mut atoms = BTreeMap::new();
        for (x, w) in &self.atoms {
            for (y, v) in &other.atoms {
                atoms.insert((x.clone(), y.clone()), w * v);
            }
        }
        SubDist { atoms }
    }

    /// `ν(A)` for the event given as a predicate.
    pub fn event_prob<F: FnMut(&P) -> bool>(&self, mut event: F) -> Rational {
        self.atoms
            .iter()
            .filter(|(p, _)| event(p))
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    /// Keeps only the atoms satisfying the predicate.
    pub fn restrict<F: FnMut(&P) -> bool>(&self, mut keep: F) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .filter(|(p, _)| keep(p))
                .map(|(p, w)| (p.clone(), w.clone()))
                .collect(),
        }
    }

    /// Multiplies every weight by `factor` (which must keep mass ≤ 1 to stay a subdistribution).
    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self {
            atoms: self.atoms.iter().map(|(p, w)| (p.clone(), w * factor)).collect(),
        }
    }

    /// Pointwise sum; the caller is responsible for the mass staying ≤ 1.
    pub fn add(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        for (p, w) in &other.atoms {
            *atoms.entry(p.clone()).or_insert_with(Rational::zero) += w;
        }
        Self { atoms }
    }

    /// `self ⊑ other` pointwise.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.atoms.iter().all(|(p, w)| *w <= other.weight(p))
    }

    /// Removes atoms lighter than `eps`; the dropped mass is returned, never lost silently.
    pub fn prune(&self, eps: &Rational) -> (Self, Rational) {
        let mut kept = BTreeMap::new();
        let mut dropped = Rational::zero();
        for (p, w) in &self.atoms {
            if w < eps {
                dropped += w;
            } else {
                kept.insert(p.clone(), w.clone());
            }
        }
        (Self { atoms: kept }, dropped)
    }

    /// Pointwise supremum of an ω-chain, checked for monotonicity.
    pub fn sup_chain(chain: &[Self]) -> Result<Self, MeasureError> {
        for (i, pair) in chain.windows(2).enumerate() {
            if !pair[0].dominated_by(&pair[1]) {
                return Err(MeasureError::ChainNotMonotone { index: i + 1 });
            }
        }
        let mut atoms: BTreeMap<P, Rational> = BTreeMap::new();
        for d in chain {
            for (p, w) in &d.atoms {
                let e = atoms.entry(p.clone()).or_insert_with(Rational::zero);
                if *w > *e {
                    *e = w.clone();
                }
            }
        }
        Ok(Self { atoms })
    }
}

impl<P: Ord + Clone> SubDist<SubDist<P>> {
    /// Monad multiplication.
    pub fn flatten(&self) -> SubDist<P> {
        self.bind(|inner| inner.clone())
    }
}

impl<P: Ord + fmt::Debug> fmt::Debug for SubDist<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}: {}", p, format_rational(w))?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize)]
struct AtomRecord {
    point: String,
    weight: String,
}

impl<P: Ord + fmt::Display> SubDist<P> {
    pub fn to_record(&self) -> serde_json::Value {
        let atoms: Vec<AtomRecord> = self
            .atoms
            .iter()
            .map(|(p, w)| AtomRecord { point: p.to_string(), weight: format_rational(w) })
            .collect();
        serde_json::to_value(atoms).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::{parse_rational, ratio};
    use proptest::prelude::*;

    fn d(pairs: &[(i64, (i64, i64))]) -> SubDist<i64> {
        SubDist::from_weights(pairs.iter().map(|&(p, (n, m))| (p, ratio(n, m)))).unwrap()
    }

    #[test]
    fn dirac_and_event() {
        let m = SubDist::dirac(3i64);
        assert_eq!(m.weight(&3), Rational::one());
        assert_eq!(m.event_prob(|x| *x == 3), Rational::one());
        assert_eq!(SubDist::<i64>::zero().event_prob(|_| true), Rational::zero());
    }

    #[test]
    fn bind_examples() {
        let coin = d(&[(0, (1, 2)), (1, (1, 2))]);
        assert_eq!(coin.bind(|x| SubDist::dirac(x + 1)), d(&[(1, (1, 2)), (2, (1, 2))]));
        assert_eq!(coin.bind(|_| SubDist::<i64>::zero()), SubDist::zero());
        let spread = coin.bind(|x| d(&[(*x, (1, 2)), (x + 1, (1, 2))]));
        assert_eq!(spread, d(&[(0, (1, 4)), (1, (1, 2)), (2, (1, 4))]));
        assert_eq!(spread.event_prob(|x| *x >= 1), ratio(3, 4));
        assert_eq!(SubDist::dirac(5i64).bind(|x| d(&[(*x, (1, 3))])), d(&[(5, (1, 3))]));
    }

    #[test]
    fn product_examples() {
        let coin = d(&[(0, (1, 2)), (1, (1, 2))]);
        let sq = coin.product(&coin);
        assert_eq!(sq.len(), 4);
        assert!(sq.iter().all(|(_, w)| *w == ratio(1, 4)));
        let st = SubDist::dirac(9i64).product(&coin);
        assert_eq!(st.map(|(_, y)| *y), coin);
        assert!(st.support().all(|(x, _)| *x == 9));
    }

    #[test]
    fn sup_chain_examples() {
        let z = SubDist::<i64>::zero();
        assert_eq!(SubDist::sup_chain(&[z.clone(), z.clone()]).unwrap(), z);
        let chain = [d(&[(0, (1, 2))]), d(&[(0, (1, 2)), (1, (1, 4))]), d(&[(0, (1, 2)), (1, (3, 8))])];
        assert_eq!(SubDist::sup_chain(&chain).unwrap(), chain[2]);
        let bad = [d(&[(0, (1, 2))]), d(&[(0, (1, 4))])];
        assert_eq!(SubDist::sup_chain(&bad), Err(MeasureError::ChainNotMonotone { index: 1 }));
    }

    #[test]
    fn geometric_unrollings_converge() {
        // n-th approximant of "flip until heads" with p = 1/2
        let p = ratio(1, 2);
        let mut chain = Vec::new();
        let mut acc = SubDist::<i64>::zero();
        for k in 0..50 {
            let q = &p * num_traits::pow(Rational::one() - &p, k);
            acc = acc.add(&SubDist::from_weights([(k as i64, q)]).unwrap());
            chain.push(acc.clone());
        }
        let sup = SubDist::sup_chain(&chain).unwrap();
        let gap = Rational::one() - sup.mass();
        assert!(gap > Rational::zero() && gap < parse_rational("1e-12").unwrap());
    }

    #[test]
    fn prune_examples() {
        let tiny = parse_rational("1e-20").unwrap();
        let nu = SubDist::from_weights([(0i64, tiny.clone()), (1, ratio(9, 10))]).unwrap();
        let (kept, dropped) = nu.prune(&parse_rational("1e-15").unwrap());
        assert_eq!(kept, d(&[(1, (9, 10))]));
        assert_eq!(dropped, tiny);
        assert_eq!(nu.prune(&Rational::zero()), (nu.clone(), Rational::zero()));
        let z = SubDist::<i64>::zero();
        assert_eq!(z.prune(&ratio(1, 1_000_000_000)), (z.clone(), Rational::zero()));
    }

    #[test]
    fn rejects_excess_mass() {
        assert!(SubDist::from_weights([(0i64, ratio(3, 4)), (1, ratio(1, 2))]).is_err());
        assert!(SubDist::from_weights([(0i64, ratio(-1, 4))]).is_err());
    }

    pub(crate) fn arb_dist(max_support: usize) -> impl Strategy<Value = SubDist<i64>> {
        (prop::collection::vec((0i64..12, 1u32..20), 0..=max_support), 0u32..4).prop_map(|(raw, slack)| {
            let total: u32 = raw.iter().map(|(_, w)| *w).sum::<u32>() + slack;
            if total == 0 {
                return SubDist::zero();
            }
            SubDist::from_weights(raw.into_iter().map(|(p, w)| (p, ratio(w as i64, total as i64)))).unwrap()
        })
    }

    fn kernel(seed: i64) -> impl Fn(&i64) -> SubDist<i64> {
        move |x: &i64| {
            let a = (x * 7 + seed).rem_euclid(5);
            let b = (x * 3 + seed * 2).rem_euclid(4);
            SubDist::from_weights([(x + a, ratio(1 + b, 6)), (x - b, ratio(1, 3 + a))]).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn monad_laws(nu in arb_dist(8), x in -5i64..5, s1 in 0i64..10, s2 in 0i64..10) {
            let f = kernel(s1);
            let g = kernel(s2);
            prop_assert_eq!(SubDist::dirac(x).bind(&f), f(&x));
            prop_assert_eq!(nu.bind(|p| SubDist::dirac(*p)), nu.clone());
            prop_assert_eq!(nu.bind(&f).bind(&g), nu.bind(|p| f(p).bind(&g)));
            prop_assert!(nu.bind(&f).mass() <= nu.mass());
        }

        #[test]
        fn product_mass_and_marginals(a in arb_dist(8), b in arb_dist(8)) {
            let p = a.product(&b);
            prop_assert_eq!(p.mass(), a.mass() * b.mass());
            prop_assert_eq!(p.map(|(x, _)| *x), a.scale(&b.mass()));
            prop_assert_eq!(p.map(|(_, y)| *y), b.scale(&a.mass()));
        }

        #[test]
        fn sup_chain_properties(a in arb_dist(6)) {
            let constant = vec![a.clone(); 3];
            prop_assert_eq!(SubDist::sup_chain(&constant).unwrap(), a.clone());
            let half = a.scale(&ratio(1, 2));
            let chain = vec![SubDist::zero(), half.clone(), a.clone()];
            let sup = SubDist::sup_chain(&chain).unwrap();
            for c in &chain {
                prop_assert!(c.dominated_by(&sup));
            }
        }
    }
}
