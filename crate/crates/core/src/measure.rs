//! Exact sums of rational multiples of square roots.
//!
//! Masses of simplices with rational vertices are square roots of rational
//! Gram determinants. A [`Measure`] keeps them in the radical form
//! `Σ cᵢ √mᵢ` keyed by a reduced integer radicand, so masses of coplanar or
//! collinear pieces add exactly. Inequalities are decided by certified dyadic
//! enclosures.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::rational::{is_perfect_square, Rational};

/// Default width of reported enclosures.
pub fn default_width() -> Rational {
    Rational::new(BigInt::one(), num::pow(BigInt::from(10), 12))
}

const SMALL_PRIMES_LIMIT: u32 = 1000;
const MAX_SIGN_BITS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct Measure {
    /// radicand → nonzero coefficient; radicand 1 is the rational part.
    terms: BTreeMap<BigInt, Rational>,
}

/// Splits `n = s² m` removing squares of small primes (and a perfect-square
/// cofactor). The map `n ↦ (s, m)` is deterministic, so equal radicands always
/// land on the same key.
fn reduce_radicand(n: &BigInt) -> (BigInt, BigInt) {
    let mut m = n.clone();
    let mut s = BigInt::one();
    if m.is_zero() {
        return (BigInt::zero(), BigInt::one());
    }
    let mut p: u32 = 2;
    while p <= SMALL_PRIMES_LIMIT {
        let pp = BigInt::from(p * p);
        while (&m % &pp).is_zero() {
            m /= &pp;
            s *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if is_perfect_square(&m) {
        s *= m.sqrt();
        m = BigInt::one();
    }
    (s, m)
}

impl Measure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(r: Rational) -> Self {
        let mut m = Self::zero();
        m.add_term(BigInt::one(), r);
        m
    }

    pub fn from_int(n: i64) -> Self {
        Self::rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `coeff · √n` for a nonnegative integer `n`.
    pub fn sqrt_int_scaled(n: &BigInt, coeff: Rational) -> Self {
        assert!(!n.is_negative(), "square root of a negative integer");
        let (s, m) = reduce_radicand(n);
        let mut out = Self::zero();
        out.add_term(m, coeff * Rational::from_integer(s));
        out
    }

    /// `√r` for a nonnegative rational `r`.
    pub fn sqrt(r: &Rational) -> Self {
        assert!(!r.is_negative(), "square root of a negative rational");
        let n = r.numer() * r.denom();
        Self::sqrt_int_scaled(&n, Rational::new(BigInt::one(), r.denom().clone()))
    }

    fn add_term(&mut self, radicand: BigInt, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(radicand.clone()).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&radicand);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The exact value when it is rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&BigInt::one()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigInt, &Rational)> {
        self.terms.iter()
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn mul(&self, other: &Measure) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let (s, m) = reduce_radicand(&(m1 * m2));
                out.add_term(m, c1 * c2 * Rational::from_integer(s));
            }
        }
        out
    }

    /// Dyadic enclosure `[lo, hi]` using `bits` fractional bits per root.
    pub fn enclosure_bits(&self, bits: usize) -> (Rational, Rational) {
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        let den = BigInt::one() << bits;
        for (m, c) in &self.terms {
            if m.is_one() {
                lo += c;
                hi += c;
                continue;
            }
            let s = (m << (2 * bits)).sqrt();
            let r_lo = Rational::new(s.clone(), den.clone());
            let r_hi = Rational::new(s + 1, den.clone());
            if c.is_positive() {
                lo += c * &r_lo;
                hi += c * &r_hi;
            } else {
                lo += c * &r_hi;
                hi += c * &r_lo;
            }
        }
        (lo, hi)
    }

    /// Enclosure whose width does not exceed `width`.
    pub fn enclosure(&self, width: &Rational) -> (Rational, Rational) {
        let mut bits = 48;
        loop {
            let (lo, hi) = self.enclosure_bits(bits);
            if &(&hi - &lo) <= width || bits > MAX_SIGN_BITS {
                return (lo, hi);
            }
            bits *= 2;
        }
    }

    pub fn approx(&self) -> f64 {
        let (lo, hi) = self.enclosure_bits(60);
        crate::rational::to_f64(&((lo + hi) / Rational::from_integer(BigInt::from(2))))
    }

    /// Certified sign; `None` only if the enclosure never separates from zero
    /// within the precision cap.
    pub fn sign(&self) -> Option<Ordering> {
        if let Some(r) = self.as_rational() {
            return Some(r.cmp(&Rational::zero()));
        }
        let mut bits = 48;
        while bits <= MAX_SIGN_BITS {
            let (lo, hi) = self.enclosure_bits(bits);
            if lo.is_positive() {
                return Some(Ordering::Greater);
            }
            if hi.is_negative() {
                return Some(Ordering::Less);
            }
            bits *= 2;
        }
        None
    }

    pub fn cmp_certified(&self, other: &Measure) -> Option<Ordering> {
        (self - other).sign()
    }

    /// `self ≤ other`, decided exactly or by certified enclosures. A
    /// difference that stays unresolved at the precision cap counts as a tie.
    pub fn le(&self, other: &Measure) -> bool {
        !matches!(self.cmp_certified(other), Some(Ordering::Greater))
    }

    pub fn lt(&self, other: &Measure) -> bool {
        matches!(self.cmp_certified(other), Some(Ordering::Less))
    }

    /// `self ≤ other + tol` with `tol ≥ 0`.
    pub fn le_tol(&self, other: &Measure, tol: &Rational) -> bool {
        (self - &(other + &Measure::rational(tol.clone()))).sign() != Some(Ordering::Greater)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.is_one() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "sqrt({m})")?;
            } else {
                write!(f, "{c}*sqrt({m})")?;
            }
        }
        Ok(())
    }
}

impl Add<&Measure> for &Measure {
    type Output = Measure;
    fn add(self, rhs: &Measure) -> Measure {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Measure {
    type Output = Measure;
    fn add(mut self, rhs: Measure) -> Measure {
        self += &rhs;
        self
    }
}

impl AddAssign<&Measure> for Measure {
    fn add_assign(&mut self, rhs: &Measure) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl Neg for &Measure {
    type Output = Measure;
    fn neg(self) -> Measure {
        Measure { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Sub<&Measure> for &Measure {
    type Output = Measure;
    fn sub(self, rhs: &Measure) -> Measure {
        self + &(-rhs)
    }
}

impl std::iter::Sum for Measure {
    fn sum<I: Iterator<Item = Measure>>(iter: I) -> Measure {
        let mut acc = Measure::zero();
        for m in iter {
            acc += &m;
        }
        acc
    }
}
