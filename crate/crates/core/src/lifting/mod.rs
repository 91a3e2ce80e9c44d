//! Graded liftings `G^(γ,δ)Φ` of relations to subdistributions, decided on
//! finite supports.

pub mod simplex;
pub mod text;
pub mod witness;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grade::Grade;
use crate::measure::SubDist;
use crate::num::{ExpNum, Rational};

pub use witness::{witness_search, WitnessPair};

/// Largest `supp(ν1)` handled by subset enumeration.
pub const DEFAULT_SUBSET_BOUND: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("support of size {size} exceeds the enumeration bound {bound}")]
    SupportTooLarge { size: usize, bound: usize },
}

pub type KeyFn<P> = Arc<dyn Fn(&P) -> String + Send + Sync>;
pub type PredFn<P> = Arc<dyn Fn(&P, &P) -> bool + Send + Sync>;

/// A relation on a single carrier.
#[derive(Clone)]
pub enum Relation<P> {
    Eq,
    Explicit(BTreeSet<(P, P)>),
    /// `x Φ y` iff `key(x) = key(y)`.
    Keyed(KeyFn<P>),
    Predicate(PredFn<P>),
}

impl<P: fmt::Debug> fmt::Debug for Relation<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Eq => write!(f, "Eq"),
            Relation::Explicit(s) => f.debug_set().entries(s.iter()).finish(),
            Relation::Keyed(_) => write!(f, "Keyed(..)"),
            Relation::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

impl<P: Ord + Clone + Send + Sync + 'static> Relation<P> {
    pub fn full() -> Self {
        Relation::Predicate(Arc::new(|_, _| true))
    }

    pub fn empty() -> Self {
        Relation::Explicit(BTreeSet::new())
    }

    pub fn explicit<I: IntoIterator<Item = (P, P)>>(pairs: I) -> Self {
        Relation::Explicit(pairs.into_iter().collect())
    }

    pub fn predicate<F: Fn(&P, &P) -> bool + Send + Sync + 'static>(f: F) -> Self {
        Relation::Predicate(Arc::new(f))
    }

    pub fn keyed<F: Fn(&P) -> String + Send + Sync + 'static>(f: F) -> Self {
        Relation::Keyed(Arc::new(f))
    }

    pub fn related(&self, x: &P, y: &P) -> bool {
        match self {
            Relation::Eq => x == y,
            Relation::Explicit(s) => s.contains(&(x.clone(), y.clone())),
            Relation::Keyed(k) => k(x) == k(y),
            Relation::Predicate(f) => f(x, y),
        }
    }

    /// `Φ^op`.
    pub fn opposite(&self) -> Self {
        match self {
            Relation::Eq | Relation::Keyed(_) => self.clone(),
            Relation::Explicit(s) => Relation::Explicit(s.iter().map(|(a, b)| (b.clone(), a.clone())).collect()),
            Relation::Predicate(f) => {
                let f = f.clone();
                Relation::Predicate(Arc::new(move |x, y| f(y, x)))
            }
        }
    }

    /// `Φ(A) ∩ within`.
    pub fn image<'a>(&self, a: &[P], within: impl IntoIterator<Item = &'a P>) -> Vec<P>
    where
        P: 'a,
    {
        within.into_iter().filter(|y| a.iter().any(|x| self.related(x, y))).cloned().collect()
    }
}

/// Arithmetic needed by the membership check.
pub trait Weight: Clone + Ord {
    fn zero() -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
}

impl Weight for Rational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
}

impl Weight for ExpNum {
    fn zero() -> Self {
        ExpNum::zero()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `ν1(A) ≤ γ ν2(Φ(A)) + δ`
    Forward,
    /// `ν2(B) ≤ γ ν1(Φ^op(B)) + δ`
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation<P> {
    pub direction: Direction,
    /// The tested set on the side being bounded.
    pub set: Vec<P>,
    /// Its image on the other side.
    pub image: Vec<P>,
    pub lhs: ExpNum,
    pub rhs: ExpNum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership<P> {
    Holds,
    Fails(Violation<P>),
}

impl<P> Membership<P> {
    pub fn holds(&self) -> bool {
        matches!(self, Membership::Holds)
    }

    pub fn violation(&self) -> Option<&Violation<P>> {
        match self {
            Membership::Holds => None,
            Membership::Fails(v) => Some(v),
        }
    }
}

/// `(ν1, ν2) ∈ G^(γ,δ)Φ`, plus the mirrored condition when `symmetric`.
pub fn lifting_member<P>(
    nu1: &SubDist<P>,
    nu2: &SubDist<P>,
    phi: &Relation<P>,
    g: &Grade,
    symmetric: bool,
) -> Result<Membership<P>, LiftError>
where
    P: Ord + Clone + Send + Sync + 'static,
{
    lifting_member_bounded(nu1, nu2, phi, g, symmetric, DEFAULT_SUBSET_BOUND)
}

pub fn lifting_member_bounded<P>(
    nu1: &SubDist<P>,
    nu2: &SubDist<P>,
    phi: &Relation<P>,
    g: &Grade,
    symmetric: bool,
    bound: usize,
) -> Result<Membership<P>, LiftError>
where
    P: Ord + Clone + Send + Sync + 'static,
{
    let w1: BTreeMap<P, Rational> = nu1.iter().map(|(p, w)| (p.clone(), w.clone())).collect();
    let w2: BTreeMap<P, Rational> = nu2.iter().map(|(p, w)| (p.clone(), w.clone())).collect();
    match (g.gamma().as_rational(), g.delta().as_rational()) {
        (Some(gamma), Some(delta)) => member_directed(&w1, &w2, phi, &gamma, &delta, symmetric, bound),
        _ => {
            let lift = |m: BTreeMap<P, Rational>| m.into_iter().map(|(p, w)| (p, ExpNum::rational(w))).collect();
            member_directed(&lift(w1), &lift(w2), phi, g.gamma(), g.delta(), symmetric, bound)
        }
    }
}

/// Membership for subdistributions given by unnormalized weights, i.e.
/// `ν_i = w_i / Σ w_i`. Both sides are scaled by `Z1·Z2` so no division is needed.
pub fn lifting_member_unnormalized<P>(
    w1: &BTreeMap<P, ExpNum>,
    w2: &BTreeMap<P, ExpNum>,
    phi: &Relation<P>,
    g: &Grade,
    symmetric: bool,
) -> Result<Membership<P>, LiftError>
where
    P: Ord + Clone + Send + Sync + 'static,
{
    let total = |w: &BTreeMap<P, ExpNum>| w.values().fold(ExpNum::zero(), |a, b| &a + b);
    let (z1, z2) = (total(w1), total(w2));
    let s1 = w1.iter().map(|(p, w)| (p.clone(), w * &z2)).collect();
    let s2 = w2.iter().map(|(p, w)| (p.clone(), w * &z1)).collect();
    let delta = &(g.delta() * &z1) * &z2;
    member_directed(&s1, &s2, phi, g.gamma(), &delta, symmetric, DEFAULT_SUBSET_BOUND)
}

fn member_directed<P, W>(
    w1: &BTreeMap<P, W>,
    w2: &BTreeMap<P, W>,
    phi: &Relation<P>,
    gamma: &W,
    delta: &W,
    symmetric: bool,
    bound: usize,
) -> Result<Membership<P>, LiftError>
where
    P: Ord + Clone + Send + Sync + 'static,
    W: Weight + Into<ExpNum>,
{
    if let Some(v) = one_direction(w1, w2, phi, gamma, delta, bound)? {
        return Ok(Membership::Fails(v));
    }
    if symmetric {
        if let Some(mut v) = one_direction(w2, w1, &phi.opposite(), gamma, delta, bound)? {
            v.direction = Direction::Backward;
            return Ok(Membership::Fails(v));
        }
    }
    Ok(Membership::Holds)
}

fn key_of<P: Ord + Clone + Send + Sync + 'static>(phi: &Relation<P>) -> Option<KeyFn<P>> {
    match phi {
        Relation::Eq => None,
        Relation::Keyed(k) => Some(k.clone()),
        _ => None,
    }
}

fn one_direction<P, W>(
    w1: &BTreeMap<P, W>,
    w2: &BTreeMap<P, W>,
    phi: &Relation<P>,
    gamma: &W,
    delta: &W,
    bound: usize,
) -> Result<Option<Violation<P>>, LiftError>
where
    P: Ord + Clone + Send + Sync + 'static,
    W: Weight + Into<ExpNum>,
{
    let sum = |m: &BTreeMap<P, W>, set: &[P]| set.iter().filter_map(|p| m.get(p)).fold(W::zero(), |a, b| a.plus(b));
    let violation = |set: Vec<P>, image: Vec<P>| {
        let lhs = sum(w1, &set);
        let rhs = gamma.times(&sum(w2, &image)).plus(delta);
        (lhs > rhs).then(|| Violation { direction: Direction::Forward, set, image, lhs: lhs.into(), rhs: rhs.into() })
    };
    // Eq-like relations: the worst set collects every class where ν1 beats γ·ν2
    if matches!(phi, Relation::Eq) || key_of(phi).is_some() {
        let key = key_of(phi);
        let mut classes: BTreeMap<String, (Vec<P>, Vec<P>)> = BTreeMap::new();
        let mut eq_classes: BTreeMap<P, (Vec<P>, Vec<P>)> = BTreeMap::new();
        for p in w1.keys() {
            match &key {
                Some(k) => classes.entry(k(p)).or_default().0.push(p.clone()),
                None => eq_classes.entry(p.clone()).or_default().0.push(p.clone()),
            }
        }
        for p in w2.keys() {
            match &key {
                Some(k) => {
                    if let Some(c) = classes.get_mut(&k(p)) {
                        c.1.push(p.clone());
                    }
                }
                None => {
                    if let Some(c) = eq_classes.get_mut(p) {
                        c.1.push(p.clone());
                    }
                }
            }
        }
        let (mut set, mut image) = (Vec::new(), Vec::new());
        for (a, b) in classes.into_values().chain(eq_classes.into_values()) {
            if sum(w1, &a) > gamma.times(&sum(w2, &b)) {
                set.extend(a);
                image.extend(b);
            }
        }
        set.sort();
        image.sort();
        return Ok(violation(set, image));
    }

    let xs: Vec<&P> = w1.keys().collect();
    if xs.len() > bound {
        return Err(LiftError::SupportTooLarge { size: xs.len(), bound });
    }
    // points of supp(ν2) related to something in supp(ν1)
    let ys: Vec<&P> = w2.keys().filter(|y| xs.iter().any(|x| phi.related(x, y))).collect();
    let words = ys.len().div_ceil(64).max(1);
    let img: Vec<Vec<u64>> = xs
        .iter()
        .map(|x| {
            let mut bits = vec![0u64; words];
            for (j, y) in ys.iter().enumerate() {
                if phi.related(x, y) {
                    bits[j / 64] |= 1 << (j % 64);
                }
            }
            bits
        })
        .collect();
    let yw: Vec<W> = ys.iter().map(|y| w2[*y].clone()).collect();
    let xw: Vec<W> = xs.iter().map(|x| w1[*x].clone()).collect();
    let n = xs.len();
    let mut sums1 = vec![W::zero(); 1 << n];
    let mut imgs = vec![vec![0u64; words]; 1 << n];
    let mut rhs_cache: HashMap<Vec<u64>, W> = HashMap::new();
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let prev = mask & (mask - 1);
        sums1[mask] = sums1[prev].plus(&xw[low]);
        let bits: Vec<u64> = imgs[prev].iter().zip(&img[low]).map(|(a, b)| a | b).collect();
        let rhs = rhs_cache
            .entry(bits.clone())
            .or_insert_with(|| {
                let mass = (0..ys.len())
                    .filter(|j| bits[j / 64] >> (j % 64) & 1 == 1)
                    .fold(W::zero(), |a, j| a.plus(&yw[j]));
                gamma.times(&mass).plus(delta)
            })
            .clone();
        if sums1[mask] > rhs {
            let set = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| xs[i].clone()).collect();
            let image = (0..ys.len()).filter(|j| bits[j / 64] >> (j % 64) & 1 == 1).map(|j| ys[j].clone()).collect();
            return Ok(Some(Violation {
                direction: Direction::Forward,
                set,
                image,
                lhs: sums1[mask].clone().into(),
                rhs: rhs.into(),
            }));
        }
        imgs[mask] = bits;
    }
    Ok(None)
}

/// `Δ_γ(d1, d2)`: the larger of the two positive-part sums.
pub fn skew_distance<P: Ord + Clone>(d1: &SubDist<P>, d2: &SubDist<P>, gamma: &ExpNum) -> ExpNum {
    let zero = Rational::from_integer(0.into());
    let one_way = |a: &SubDist<P>, b: &SubDist<P>| {
        let mut points: BTreeSet<&P> = a.support().collect();
        points.extend(b.support());
        points.into_iter().fold(ExpNum::zero(), |acc, p| {
            let wa = a.weight(p);
            let wb = b.weight(p);
            let diff = &ExpNum::rational(wa) - &(gamma * &ExpNum::rational(wb));
            if diff > ExpNum::rational(zero.clone()) {
                &acc + &diff
            } else {
                acc
            }
        })
    };
    one_way(d1, d2).max(one_way(d2, d1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForallEqReport {
    /// Whether `G^(γ_i,δ_i)(x<1>=i ⇒ x<2>=i)` holds, per index.
    pub per_index: Vec<bool>,
    /// `(max γ_i, Σ δ_i)`.
    pub grade: Grade,
    /// Membership in `G^grade(x<1>=x<2>)`.
    pub combined: bool,
}

/// Checks the per-index memberships and the combined equality lifting on
/// distributions over `(index, rest)` pairs.
pub fn forall_eq_combine<V, P>(
    memberships: &[(V, Grade)],
    nu1: &SubDist<(V, P)>,
    nu2: &SubDist<(V, P)>,
) -> Result<ForallEqReport, LiftError>
where
    V: Ord + Clone + Send + Sync + fmt::Debug + 'static,
    P: Ord + Clone + Send + Sync + 'static,
{
    let mut per_index = Vec::new();
    let mut grade: Option<Grade> = None;
    for (i, g) in memberships {
        let i = i.clone();
        let rel = Relation::predicate(move |a: &(V, P), b: &(V, P)| a.0 != i || b.0 == i);
        per_index.push(lifting_member(nu1, nu2, &rel, g, false)?.holds());
        grade = Some(match grade {
            None => g.clone(),
            Some(acc) => Grade::new(acc.gamma().clone().max(g.gamma().clone()), acc.delta() + g.delta())
                .expect("combination of valid grades"),
        });
    }
    let grade = grade.unwrap_or_else(Grade::identity);
    let same = Relation::keyed(|p: &(V, P)| format!("{:?}", p.0));
    let combined = lifting_member(nu1, nu2, &same, &grade, false)?.holds();
    Ok(ForallEqReport { per_index, grade, combined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::{parse_rational, ratio};

    fn d(pairs: &[(&'static str, &str)]) -> SubDist<&'static str> {
        SubDist::from_weights(pairs.iter().map(|(k, w)| (*k, parse_rational(w).unwrap()))).unwrap()
    }

    fn g(gamma: &str, delta: &str) -> Grade {
        Grade::from_rationals(parse_rational(gamma).unwrap(), parse_rational(delta).unwrap()).unwrap()
    }

    #[test]
    fn reflexive_at_identity() {
        let a = d(&[("a", "0.5"), ("b", "0.5")]);
        assert!(lifting_member(&a, &a, &Relation::Eq, &Grade::identity(), true).unwrap().holds());
    }

    #[test]
    fn ratio_threshold() {
        let a = d(&[("a", "0.6"), ("b", "0.4")]);
        let b = d(&[("a", "0.4"), ("b", "0.6")]);
        assert!(lifting_member(&a, &b, &Relation::Eq, &g("1.5", "0"), true).unwrap().holds());
        let m = lifting_member(&a, &b, &Relation::Eq, &g("1.2", "0"), false).unwrap();
        assert_eq!(m.violation().unwrap().set, vec!["a"]);
        // the explicit enumeration agrees with the Eq shortcut
        let eq = Relation::explicit([("a", "a"), ("b", "b")]);
        let m = lifting_member(&a, &b, &eq, &g("1.2", "0"), false).unwrap();
        assert_eq!(m.violation().unwrap().set, vec!["a"]);
    }

    #[test]
    fn full_relation_compares_masses() {
        let a = d(&[("a", "0.2"), ("b", "0.3")]);
        let b = d(&[("c", "0.6")]);
        assert!(lifting_member(&a, &b, &Relation::full(), &Grade::identity(), false).unwrap().holds());
        assert!(!lifting_member(&b, &a, &Relation::full(), &Grade::identity(), false).unwrap().holds());
    }

    #[test]
    fn skew_examples() {
        let a = d(&[("0", "0.6"), ("1", "0.4")]);
        let b = d(&[("0", "0.4"), ("1", "0.6")]);
        assert_eq!(skew_distance(&a, &a, &ExpNum::one()), ExpNum::zero());
        assert_eq!(skew_distance(&a, &b, &ExpNum::one()), ExpNum::rational(ratio(1, 5)));
    }

    #[test]
    fn too_large_support() {
        let a = SubDist::uniform((0..20).collect::<Vec<i32>>());
        let rel = Relation::predicate(|x: &i32, y: &i32| x <= y);
        let e = lifting_member(&a, &a, &rel, &Grade::identity(), false).unwrap_err();
        assert_eq!(e, LiftError::SupportTooLarge { size: 20, bound: 16 });
        // Eq does not need enumeration
        assert!(lifting_member(&a, &a, &Relation::Eq, &Grade::identity(), true).unwrap().holds());
    }

    #[test]
    fn forall_eq_two_outcomes() {
        let nu1 = SubDist::from_weights([((0, ()), ratio(1, 2)), ((1, ()), ratio(1, 2))]).unwrap();
        let nu2 = SubDist::from_weights([((0, ()), ratio(9, 20)), ((1, ()), ratio(11, 20))]).unwrap();
        let per = [(0, g("1", "0.05")), (1, g("1", "0.05"))];
        let r = forall_eq_combine(&per, &nu1, &nu2).unwrap();
        assert_eq!(r.per_index, vec![true, true]);
        assert_eq!(r.grade, g("1", "0.1"));
        assert!(r.combined);
    }
}
