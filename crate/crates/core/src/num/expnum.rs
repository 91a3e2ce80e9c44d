//! Exact numbers of the form `Σ cᵢ·e^{xᵢ}` with rational `cᵢ`, `xᵢ`.
//!
//! The set is closed under `+`, `-` and `*`, which is all that privacy grades
//! need (`γ = e^ε`, products of γ's, `δ + γ·δ'`). Distinct rational exponents
//! give linearly independent exponentials over the algebraic numbers, so a
//! non-zero canonical sum is never zero and its sign is decided by refining
//! rational enclosures of each `e^{xᵢ}` until the interval excludes zero.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::rational::{format_rational, round_down, round_up, to_f64, Rational};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExpNum {
    /// exponent -> coefficient, zero coefficients never stored
    terms: BTreeMap<Rational, Rational>,
}

impl ExpNum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn rational(q: Rational) -> Self {
        Self::term(q, Rational::zero())
    }

    /// `e^x`.
    pub fn exp(x: Rational) -> Self {
        Self::term(Rational::one(), x)
    }

    /// `c · e^x`.
    pub fn term(coef: Rational, exponent: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !coef.is_zero() {
            terms.insert(exponent, coef);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value as a rational, if it has no transcendental part.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (x, c) = self.terms.iter().next().unwrap();
                x.is_zero().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// `x` when the value is exactly `e^x`.
    pub fn as_pure_exp(&self) -> Option<Rational> {
        if self.terms.len() != 1 {
            return None;
        }
        let (x, c) = self.terms.iter().next().unwrap();
        c.is_one().then(|| x.clone())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.terms.iter()
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(x, c)| to_f64(c) * to_f64(x).exp())
            .sum()
    }

    /// Natural log as a double; exact exponent when the value is a pure exponential.
    pub fn ln_f64(&self) -> f64 {
        match self.as_pure_exp() {
            Some(x) => to_f64(&x),
            None => self.to_f64().ln(),
        }
    }

    pub fn signum(&self) -> Ordering {
        if let Some(q) = self.as_rational() {
            return q.cmp(&Rational::zero());
        }
        let mut bits = 64u32;
        loop {
            let (lo, hi) = self.enclosure(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            if bits >= 1 << 15 {
                // unreachable for canonical non-zero sums; fall back to the midpoint
                let mid = (lo + hi) / Rational::from_integer(BigInt::from(2));
                return mid.cmp(&Rational::zero());
            }
            bits *= 2;
        }
    }

    /// Rational interval containing the value, width roughly `2^-bits` per term.
    pub fn enclosure(&self, bits: u32) -> (Rational, Rational) {
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        for (x, c) in &self.terms {
            let (elo, ehi) = exp_bounds(x, bits);
            if c.is_positive() {
                lo += c * &elo;
                hi += c * &ehi;
            } else {
                lo += c * &ehi;
                hi += c * &elo;
            }
        }
        (lo, hi)
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// A rational upper bound within `2^-bits` of the value.
    pub fn upper_rational(&self, bits: u32) -> Rational {
        self.enclosure(bits).1
    }
}

/// Rational bounds `lo ≤ e^x ≤ hi`.
pub fn exp_bounds(x: &Rational, bits: u32) -> (Rational, Rational) {
    if x.is_zero() {
        return (Rational::one(), Rational::one());
    }
    // e^x = (e^{x/m})^m with |x/m| ≤ 1
    let m = x.abs().ceil().to_integer().to_u64().unwrap_or(u64::MAX).max(1);
    let y = x / Rational::from_integer(BigInt::from(m));
    let work = bits + 16 + 64 - m.leading_zeros();
    // remainder after K terms ≤ 3 / (K+1)!
    let mut k = 1u64;
    let mut fact = Rational::one();
    let target = Rational::new(BigInt::one(), BigInt::one() << (work + 2));
    loop {
        fact *= Rational::from_integer(BigInt::from(k + 1));
        if Rational::from_integer(BigInt::from(3)) / &fact < target {
            break;
        }
        k += 1;
    }
    let mut sum = Rational::zero();
    let mut pow = Rational::one();
    let mut kfact = Rational::one();
    for i in 0..=k {
        if i > 0 {
            pow *= &y;
            kfact *= Rational::from_integer(BigInt::from(i));
        }
        sum += &pow / &kfact;
    }
    let err = Rational::from_integer(BigInt::from(3)) / fact;
    let mut lo = round_down(&(&sum - &err), work);
    let mut hi = round_up(&(&sum + &err), work);
    if !lo.is_positive() {
        lo = Rational::new(BigInt::one(), BigInt::from(4));
    }
    let (mut rlo, mut rhi) = (Rational::one(), Rational::one());
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            rlo = round_down(&(&rlo * &lo), work);
            rhi = round_up(&(&rhi * &hi), work);
        }
        e >>= 1;
        if e > 0 {
            lo = round_down(&(&lo * &lo), work);
            hi = round_up(&(&hi * &hi), work);
        }
    }
    (rlo, rhi)
}

impl PartialOrd for ExpNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExpNum {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        (self - other).signum()
    }
}

impl From<Rational> for ExpNum {
    fn from(q: Rational) -> Self {
        Self::rational(q)
    }
}

impl Add for &ExpNum {
    type Output = ExpNum;
    fn add(self, rhs: &ExpNum) -> ExpNum {
        let mut terms = self.terms.clone();
        for (x, c) in &rhs.terms {
            let entry = terms.entry(x.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(x);
            }
        }
        ExpNum { terms }
    }
}

impl Neg for &ExpNum {
    type Output = ExpNum;
    fn neg(self) -> ExpNum {
        ExpNum {
            terms: self.terms.iter().map(|(x, c)| (x.clone(), -c)).collect(),
        }
    }
}

impl Sub for &ExpNum {
    type Output = ExpNum;
    fn sub(self, rhs: &ExpNum) -> ExpNum {
        self + &(-rhs)
    }
}

impl Mul for &ExpNum {
    type Output = ExpNum;
    fn mul(self, rhs: &ExpNum) -> ExpNum {
        let mut out = ExpNum::zero();
        for (x1, c1) in &self.terms {
            for (x2, c2) in &rhs.terms {
                out = &out + &ExpNum::term(c1 * c2, x1 + x2);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExpNum {
            type Output = ExpNum;
            fn $m(self, rhs: ExpNum) -> ExpNum {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&ExpNum> for ExpNum {
            type Output = ExpNum;
            fn $m(self, rhs: &ExpNum) -> ExpNum {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for ExpNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (x, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if x.is_zero() {
                write!(f, "{}", format_rational(c))?;
            } else if c.is_one() {
                write!(f, "exp({})", format_rational(x))?;
            } else {
                write!(f, "{}*exp({})", format_rational(c), format_rational(x))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExpNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational::{int, ratio};

    #[test]
    fn exp_bounds_bracket_libm() {
        for (n, d) in [(1, 1), (-1, 1), (1, 2), (7, 3), (-25, 2), (40, 1)] {
            let x = ratio(n, d);
            let (lo, hi) = exp_bounds(&x, 64);
            let f = (n as f64 / d as f64).exp();
            assert!(to_f64(&lo) <= f * (1.0 + 1e-12), "{n}/{d}");
            assert!(to_f64(&hi) >= f * (1.0 - 1e-12), "{n}/{d}");
            assert!(to_f64(&(hi - lo)) <= f * 1e-15);
        }
    }

    #[test]
    fn sign_of_close_values() {
        // e vs 2.718281828 and 2.718281829
        let e = ExpNum::exp(int(1));
        assert!(e > ExpNum::rational(ratio(2_718_281_828, 1_000_000_000)));
        assert!(e < ExpNum::rational(ratio(2_718_281_829, 1_000_000_000)));
        // e^{1/2}·e^{1/2} = e exactly
        let h = ExpNum::exp(ratio(1, 2));
        assert_eq!(&h * &h, e);
        assert_eq!((&e - &e).signum(), Ordering::Equal);
    }

    #[test]
    fn arithmetic_is_canonical() {
        let a = ExpNum::exp(int(1)) + ExpNum::rational(int(2));
        let b = ExpNum::rational(int(2)) + ExpNum::exp(int(1));
        assert_eq!(a, b);
        assert!((&a - &b).is_zero());
        assert_eq!(ExpNum::exp(int(0)), ExpNum::one());
        assert_eq!(ExpNum::exp(ratio(3, 2)).as_pure_exp(), Some(ratio(3, 2)));
    }
}
