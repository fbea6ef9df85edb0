//! Elements `x + y·√n` of a real quadratic field with rational `x`, `y`.
//!
//! Every operation is exact. Mixing two different radicands is a programming
//! error and panics; a value with `y = 0` carries radicand 0 and combines with
//! anything.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

use super::Rational;
use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Quad {
    rat: Rational,
    irr: Rational,
    radicand: u64,
}

pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|s| s <= n) {
        x += 1;
    }
    x
}

fn is_square(n: u64) -> bool {
    let s = isqrt_u128(n as u128);
    s * s == n as u128
}

impl Quad {
    /// `x + y·√n`. A perfect-square `n` collapses to a rational.
    pub fn new(x: Rational, y: Rational, n: u64) -> Self {
        if y.is_zero() || n == 0 {
            return Quad::from(x);
        }
        if is_square(n) {
            let s = Rational::from(isqrt_u128(n as u128) as u64);
            return Quad::from(x + y * s);
        }
        Quad { rat: x, irr: y, radicand: n }
    }

    /// `(a + b·√d) / c`.
    pub fn surd(a: i64, b: i64, d: u64, c: i64) -> Result<Self> {
        if c == 0 {
            return Err(Error::Invalid("surd with zero divisor".into()));
        }
        let c = Rational::from(c);
        Ok(Quad::new(Rational::from(a) / &c, Rational::from(b) / &c, d))
    }

    /// Named constants accepted on the command line.
    pub fn named(name: &str) -> Result<Self> {
        let q = match name {
            "sqrt2-1" => Quad::surd(-1, 1, 2, 1)?,
            "sqrt2" => Quad::surd(0, 1, 2, 1)?,
            "sqrt3" => Quad::surd(0, 1, 3, 1)?,
            "phi" | "golden" => Quad::surd(1, 1, 5, 2)?,
            "phi-1" => Quad::surd(-1, 1, 5, 2)?,
            _ => return Quad::parse_general(name),
        };
        Ok(q)
    }

    /// `a+b*sqrtD/c` style: `(A,B,D,C)` written as `A,B,D,C`.
    fn parse_general(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("unknown surd `{s}`"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let a: i64 = parts[0].parse().map_err(|_| bad())?;
        let b: i64 = parts[1].parse().map_err(|_| bad())?;
        let d: u64 = parts[2].parse().map_err(|_| bad())?;
        let c: i64 = parts[3].parse().map_err(|_| bad())?;
        Quad::surd(a, b, d, c)
    }

    pub fn zero() -> Self {
        Quad::from(Rational::zero())
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rat
    }

    pub fn irrational_part(&self) -> &Rational {
        &self.irr
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        if self.radicand == 0 {
            Some(&self.rat)
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.radicand == 0 && self.rat.is_zero()
    }

    fn join(a: u64, b: u64) -> u64 {
        match (a, b) {
            (0, n) | (n, 0) => n,
            (m, n) if m == n => m,
            (m, n) => panic!("mixed radicands {m} and {n}"),
        }
    }

    pub fn signum(&self) -> i32 {
        let sx = self.rat.signum();
        let sy = self.irr.signum();
        if sy == 0 {
            return sx;
        }
        if sx == 0 || sx == sy {
            return sy;
        }
        // Opposite signs: compare x^2 with y^2 n.
        let x2 = &self.rat * &self.rat;
        let y2n = &self.irr * &self.irr * Rational::from(self.radicand);
        match x2.cmp(&y2n) {
            Ordering::Greater => sx,
            Ordering::Less => sy,
            Ordering::Equal => unreachable!("non-square radicand"),
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Quad::new(&self.rat * r, &self.irr * r, self.radicand)
    }

    pub fn conjugate(&self) -> Self {
        Quad::new(self.rat.clone(), -&self.irr, self.radicand)
    }

    /// `x^2 - n y^2`.
    pub fn norm(&self) -> Rational {
        &self.rat * &self.rat - &self.irr * &self.irr * Rational::from(self.radicand)
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        let n = self.norm().recip();
        self.conjugate().scale(&n)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Quad::from(Rational::one());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Common-denominator form `(a + b√n) / c` with `c > 0`.
    pub fn integer_form(&self) -> (BigInt, BigInt, BigInt) {
        let xd = self.rat.denom();
        let yd = self.irr.denom();
        let c = xd.lcm(&yd);
        let a = self.rat.numer() * (&c / xd);
        let b = self.irr.numer() * (&c / yd);
        (a, b, c)
    }

    pub fn floor(&self) -> BigInt {
        if self.radicand == 0 {
            return self.rat.floor();
        }
        let (a, b, c) = self.integer_form();
        let f = floor_sqrt_mul(&b, self.radicand);
        (a + f).div_floor(&c)
    }

    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    pub fn to_f64(&self) -> f64 {
        if self.radicand == 0 {
            return self.rat.to_f64();
        }
        // Cancellation-aware: go through a 96-bit enclosure.
        let (lo, hi) = self.enclose(96);
        (lo.to_f64() + hi.to_f64()) / 2.0
    }

    /// Dyadic bounds `lo ≤ self ≤ hi` with `hi - lo ≤ 2^-bits`.
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        if self.radicand == 0 {
            return (self.rat.clone(), self.rat.clone());
        }
        let scale = BigInt::from(1) << bits as usize;
        let scaled = self.scale(&Rational::from_integer(scale.clone()));
        let f = scaled.floor();
        (Rational::new(f.clone(), scale.clone()), Rational::new(f + 1, scale))
    }
}

/// `floor(b·√n)` for non-square `n`.
pub(crate) fn floor_sqrt_mul(b: &BigInt, n: u64) -> BigInt {
    let s = (b * b * BigInt::from(n)).sqrt();
    if b.is_negative() {
        -s - 1
    } else {
        s
    }
}

impl From<Rational> for Quad {
    fn from(r: Rational) -> Self {
        Quad { rat: r, irr: Rational::zero(), radicand: 0 }
    }
}

impl PartialEq for Quad {
    fn eq(&self, other: &Self) -> bool {
        self.radicand == other.radicand && self.rat == other.rat && self.irr == other.irr
    }
}

impl Eq for Quad {}

impl Hash for Quad {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rat.hash(state);
        self.irr.hash(state);
        self.radicand.hash(state);
    }
}

impl PartialOrd for Quad {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quad {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.radicand == 0 && other.radicand == 0 {
            return self.rat.cmp(&other.rat);
        }
        (self - other).signum().cmp(&0)
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand == 0 {
            return write!(f, "{}", self.rat);
        }
        if self.rat.is_zero() {
            write!(f, "{}*sqrt({})", self.irr, self.radicand)
        } else if self.irr.is_negative() {
            write!(f, "{}-{}*sqrt({})", self.rat, -&self.irr, self.radicand)
        } else {
            write!(f, "{}+{}*sqrt({})", self.rat, self.irr, self.radicand)
        }
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add<&Quad> for &Quad {
    type Output = Quad;
    fn add(self, rhs: &Quad) -> Quad {
        let n = Quad::join(self.radicand, rhs.radicand);
        Quad::new(&self.rat + &rhs.rat, &self.irr + &rhs.irr, n)
    }
}

impl Sub<&Quad> for &Quad {
    type Output = Quad;
    fn sub(self, rhs: &Quad) -> Quad {
        let n = Quad::join(self.radicand, rhs.radicand);
        Quad::new(&self.rat - &rhs.rat, &self.irr - &rhs.irr, n)
    }
}

impl Mul<&Quad> for &Quad {
    type Output = Quad;
    fn mul(self, rhs: &Quad) -> Quad {
        let n = Quad::join(self.radicand, rhs.radicand);
        let x = &self.rat * &rhs.rat + &self.irr * &rhs.irr * Rational::from(n);
        let y = &self.rat * &rhs.irr + &self.irr * &rhs.rat;
        Quad::new(x, y, n)
    }
}

impl Add for Quad {
    type Output = Quad;
    fn add(self, rhs: Quad) -> Quad {
        &self + &rhs
    }
}

impl Sub for Quad {
    type Output = Quad;
    fn sub(self, rhs: Quad) -> Quad {
        &self - &rhs
    }
}

impl Mul for Quad {
    type Output = Quad;
    fn mul(self, rhs: Quad) -> Quad {
        &self * &rhs
    }
}

impl Neg for &Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad::new(-&self.rat, -&self.irr, self.radicand)
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s21() -> Quad {
        Quad::named("sqrt2-1").unwrap()
    }

    #[test]
    fn sign_and_floor() {
        let g = s21();
        assert_eq!(g.signum(), 1);
        assert_eq!(g.floor(), BigInt::from(0));
        assert_eq!(g.scale(&Rational::from(100)).floor(), BigInt::from(41));
        assert_eq!((-&g).floor(), BigInt::from(-1));
        let x = Quad::new(Rational::from(-7), Rational::from(5), 2); // 0.0710...
        assert_eq!(x.signum(), 1);
        let y = Quad::new(Rational::from(7), Rational::from(-5), 2);
        assert_eq!(y.signum(), -1);
    }

    #[test]
    fn square_radicand_collapses() {
        let q = Quad::new(Rational::from(1), Rational::from(2), 9);
        assert_eq!(q.as_rational(), Some(&Rational::from(7)));
    }

    #[test]
    fn recip_roundtrip() {
        let g = s21();
        assert_eq!(&g * &g.recip(), Quad::from(Rational::one()));
        // 1/(√2 − 1) = √2 + 1
        assert_eq!(g.recip(), Quad::surd(1, 1, 2, 1).unwrap());
    }

    #[test]
    fn enclosure_width() {
        let (lo, hi) = s21().enclose(60);
        assert_eq!(&hi - &lo, Rational::pow2_neg(60));
        assert!(Quad::from(lo) < s21() && s21() < Quad::from(hi));
    }

    proptest! {
        #[test]
        fn floor_matches_float(a in -10_000i64..10_000, b in -10_000i64..10_000, c in 1i64..1000) {
            let q = Quad::surd(a, b, 2, c).unwrap();
            let f = (a as f64 + b as f64 * 2f64.sqrt()) / c as f64;
            let fl = q.floor();
            // Float floor can only be off when f is within rounding of an integer.
            if (f - f.round()).abs() > 1e-9 {
                prop_assert_eq!(fl.clone(), BigInt::from(f.floor() as i64));
            }
            prop_assert!(Quad::from(Rational::from_integer(fl.clone())) <= q);
            prop_assert!(Quad::from(Rational::from_integer(fl + 1)) > q);
        }
    }
}
