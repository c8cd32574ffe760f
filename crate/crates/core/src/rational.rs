//! Exact rational scalars and points in R³.

use num::bigint::{BigInt, Sign};
use num::{BigRational, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::FilmError;

pub type Rational = BigRational;

/// A point (or vector) in R³ with exact rational coordinates.
pub type Point = [Rational; 3];

pub fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn pt(x: i64, y: i64, z: i64) -> Point {
    [q(x), q(y), q(z)]
}

pub fn zero_point() -> Point {
    [Rational::zero(), Rational::zero(), Rational::zero()]
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

pub fn add(a: &Point, b: &Point) -> Point {
    [&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]]
}

pub fn scale(a: &Point, s: &Rational) -> Point {
    [&a[0] * s, &a[1] * s, &a[2] * s]
}

pub fn dot(a: &Point, b: &Point) -> Rational {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

pub fn cross(a: &Point, b: &Point) -> Point {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

pub fn det3(a: &Point, b: &Point, c: &Point) -> Rational {
    dot(a, &cross(b, c))
}

pub fn norm2(a: &Point) -> Rational {
    dot(a, a)
}

pub fn is_zero_vec(a: &Point) -> bool {
    a.iter().all(Zero::is_zero)
}

/// Sup norm ‖x‖∞ = max |xᵢ|.
pub fn sup_norm(a: &Point) -> Rational {
    a.iter().map(|c| c.abs()).max().unwrap()
}

pub fn midpoint(a: &Point, b: &Point) -> Point {
    let half = qf(1, 2);
    scale(&add(a, b), &half)
}

/// `a + t (b - a)`.
pub fn lerp(a: &Point, b: &Point, t: &Rational) -> Point {
    add(a, &scale(&sub(b, a), t))
}

/// Scales a nonzero rational vector to the primitive integer vector on the
/// same line whose first nonzero entry is positive.
pub fn primitive_direction(v: &Point) -> [BigInt; 3] {
    let mut den = BigInt::one();
    for c in v {
        den = den.lcm(c.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|c| (c * Rational::from_integer(den.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
    }
    if !g.is_zero() {
        for c in ints.iter_mut() {
            *c = &*c / &g;
        }
    }
    if let Some(first) = ints.iter().find(|c| !c.is_zero()) {
        if first.sign() == Sign::Minus {
            for c in ints.iter_mut() {
                *c = -&*c;
            }
        }
    }
    [ints[0].clone(), ints[1].clone(), ints[2].clone()]
}

pub fn int_point(v: &[BigInt; 3]) -> Point {
    [
        Rational::from_integer(v[0].clone()),
        Rational::from_integer(v[1].clone()),
        Rational::from_integer(v[2].clone()),
    ]
}

/// Parses "p/q", "p", or a decimal such as "0.25".
pub fn parse_rational(s: &str) -> Result<Rational, FilmError> {
    let t = s.trim();
    let bad = || FilmError::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        let ip_val: BigInt = if ip_abs.is_empty() { BigInt::zero() } else { ip_abs.parse().map_err(|_| bad())? };
        if !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let fp_val: BigInt = if fp.is_empty() { BigInt::zero() } else { fp.parse().map_err(|_| bad())? };
        let den = num::pow(BigInt::from(10), fp.len());
        let r = Rational::from_integer(ip_val) + Rational::new(fp_val, den);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn floor_int(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

/// Integer square root (floor) of a nonnegative big integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    n.sqrt()
}

pub fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

/// Exact rational square root when one exists.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    if is_perfect_square(n) && is_perfect_square(d) {
        Some(Rational::new(n.sqrt(), d.sqrt()))
    } else {
        None
    }
}
