//! Exact rational numbers.
//!
//! Values whose numerator and denominator fit in an `i64` are kept inline and
//! combined with `i128` intermediates; everything else falls back to
//! [`BigRational`]. The representation is canonical (lowest terms, positive
//! denominator, small whenever it fits), so equality and hashing can compare
//! representations directly.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    /// Lowest terms, `den > 0`, both in `-i64::MAX..=i64::MAX`.
    Small(i64, i64),
    Big(BigRational),
}

pub(crate) fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        return gcd_u64(a as u64, b as u64) as u128;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

#[inline]
fn fits(x: i128) -> bool {
    x >= -(i64::MAX as i128) && x <= i64::MAX as i128
}

impl Rational {
    /// Builds `num / den`. Panics when `den` is zero.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        let den = den.into();
        assert!(!den.is_zero(), "rational with zero denominator");
        Self::from_big(BigRational::new(num.into(), den))
    }

    pub fn try_new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Option<Self> {
        let den = den.into();
        if den.is_zero() {
            None
        } else {
            Some(Self::from_big(BigRational::new(num.into(), den)))
        }
    }

    /// `num / den` from machine integers, reduced.
    pub fn from_i128(num: i128, den: i128) -> Self {
        assert!(den != 0, "rational with zero denominator");
        let (mut n, mut d) = if den < 0 {
            match (num.checked_neg(), den.checked_neg()) {
                (Some(n), Some(d)) => (n, d),
                _ => return Self::from_big(BigRational::new(num.into(), den.into())),
            }
        } else {
            (num, den)
        };
        let g = gcd_u128(n.unsigned_abs(), d as u128);
        if g > 1 {
            n /= g as i128;
            d /= g as i128;
        }
        if fits(n) && fits(d) {
            Rational(Repr::Small(n as i64, d as i64))
        } else {
            Rational(Repr::Big(BigRational::new_raw(n.into(), d.into())))
        }
    }

    pub fn from_big(r: BigRational) -> Self {
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            if n != i64::MIN && d != i64::MIN {
                return Rational(Repr::Small(n, d));
            }
        }
        Rational(Repr::Big(r))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::from_big(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    /// `2^-bits`.
    pub fn pow2_neg(bits: u32) -> Self {
        Self::new(1, BigInt::one() << bits as usize)
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw((*n).into(), (*d).into()),
            Repr::Big(r) => r.clone(),
        }
    }

    /// Numerator and denominator when both fit in `i64`.
    pub fn as_small(&self) -> Option<(i64, i64)> {
        match self.0 {
            Repr::Small(n, d) => Some((n, d)),
            Repr::Big(_) => None,
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => (*n).into(),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => (*d).into(),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small(n, _) => n.signum() as i32,
            Repr::Big(r) => match r.numer().sign() {
                Sign::Minus => -1,
                Sign::NoSign => 0,
                Sign::Plus => 1,
            },
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(n, d) => {
                if *n < 0 {
                    Rational(Repr::Small(-*d, -*n))
                } else {
                    Rational(Repr::Small(*d, *n))
                }
            }
            Repr::Big(r) => Self::from_big(r.recip()),
        }
    }

    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => n.div_euclid(*d).into(),
            Repr::Big(r) => r.floor().to_integer(),
        }
    }

    pub fn ceil(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => (-((-*n).div_euclid(*d))).into(),
            Repr::Big(r) => r.ceil().to_integer(),
        }
    }

    /// Floor as an `i64`, when it fits.
    pub fn floor_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, d) => Some(n.div_euclid(*d)),
            Repr::Big(r) => r.floor().to_integer().to_i64(),
        }
    }

    /// `self - floor(self)`, in `[0, 1)`.
    pub fn fract(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(n.rem_euclid(*d), *d)),
            Repr::Big(_) => self - &Rational::from_integer(self.floor()),
        }
    }

    pub fn pow(&self, exp: i32) -> Self {
        if exp < 0 {
            return self.recip().pow(-exp);
        }
        let mut base = self.clone();
        let mut acc = Rational::one();
        let mut e = exp as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => big_to_f64(r),
        }
    }

    /// Decimal rendering rounded half away from zero to `digits` places.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let n = self.numer();
        let d = self.denom();
        let neg = n.is_negative();
        let scaled: BigInt = (n.abs() * &scale * 2u32 + &d) / (&d * 2u32);
        let s = scaled.to_string();
        let s = if s.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
        } else {
            s
        };
        let (int, frac) = s.split_at(s.len() - digits);
        let sign = if neg && scaled.sign() == Sign::Plus { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }

    /// Parses `p/q`, an integer, or a plain decimal such as `0.25`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        s.parse()
    }

    /// Exponent `k` when the denominator is exactly `2^k`.
    pub fn dyadic_exponent(&self) -> Option<u32> {
        let d = self.denom();
        let tz = d.trailing_zeros().unwrap_or(0);
        if d == BigInt::one() << tz as usize {
            Some(tz as u32)
        } else {
            None
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

fn big_to_f64(r: &BigRational) -> f64 {
    // Shift both parts down to 64 significant bits before dividing.
    let n = r.numer();
    let d = r.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let ns = (nb - 64).max(0);
    let ds = (db - 64).max(0);
    let nf = (n >> ns as usize).to_f64().unwrap_or(f64::NAN);
    let df = (d >> ds as usize).to_f64().unwrap_or(f64::NAN);
    nf / df * 2f64.powi((ns - ds) as i32)
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.hash(state);
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational `{s}`"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            return Rational::try_new(n, d).ok_or_else(bad);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits = format!("{int_digits}{frac}");
            let mut n: BigInt = digits.parse().map_err(|_| bad())?;
            if neg {
                n = -n;
            }
            let d = BigInt::from(10u32).pow(frac.len() as u32);
            return Ok(Rational::new(n, d));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rational::from_integer(n))
    }
}

macro_rules! from_int {
    ($($t:ty),*) => {$(
        impl From<$t> for Rational {
            fn from(v: $t) -> Self {
                Rational::from_i128(v as i128, 1)
            }
        }
    )*};
}
from_int!(i32, i64, u32, u64, usize);

impl From<BigInt> for Rational {
    fn from(v: BigInt) -> Self {
        Rational::from_integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational::from_big(v)
    }
}

fn add_ref(a: &Rational, b: &Rational) -> Rational {
    match (&a.0, &b.0) {
        (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
            if d1 == d2 {
                return Rational::from_i128(*n1 as i128 + *n2 as i128, *d1 as i128);
            }
            let n = *n1 as i128 * *d2 as i128 + *n2 as i128 * *d1 as i128;
            Rational::from_i128(n, *d1 as i128 * *d2 as i128)
        }
        _ => Rational::from_big(a.to_big() + b.to_big()),
    }
}

fn sub_ref(a: &Rational, b: &Rational) -> Rational {
    match (&a.0, &b.0) {
        (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
            if d1 == d2 {
                return Rational::from_i128(*n1 as i128 - *n2 as i128, *d1 as i128);
            }
            let n = *n1 as i128 * *d2 as i128 - *n2 as i128 * *d1 as i128;
            Rational::from_i128(n, *d1 as i128 * *d2 as i128)
        }
        _ => Rational::from_big(a.to_big() - b.to_big()),
    }
}

fn mul_ref(a: &Rational, b: &Rational) -> Rational {
    match (&a.0, &b.0) {
        (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
            Rational::from_i128(*n1 as i128 * *n2 as i128, *d1 as i128 * *d2 as i128)
        }
        _ => Rational::from_big(a.to_big() * b.to_big()),
    }
}

fn div_ref(a: &Rational, b: &Rational) -> Rational {
    assert!(!b.is_zero(), "division by zero");
    match (&a.0, &b.0) {
        (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
            Rational::from_i128(*n1 as i128 * *d2 as i128, *d1 as i128 * *n2 as i128)
        }
        _ => Rational::from_big(a.to_big() / b.to_big()),
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident, $atr:ident, $am:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                $f(self, rhs)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                $f(&self, rhs)
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                $f(self, &rhs)
            }
        }
        impl $atr<&Rational> for Rational {
            fn $am(&mut self, rhs: &Rational) {
                *self = $f(self, rhs);
            }
        }
        impl $atr<Rational> for Rational {
            fn $am(&mut self, rhs: Rational) {
                *self = $f(self, &rhs);
            }
        }
    };
}

binop!(Add, add, add_ref, AddAssign, add_assign);
binop!(Sub, sub, sub_ref, SubAssign, sub_assign);
binop!(Mul, mul, mul_ref, MulAssign, mul_assign);
binop!(Div, div, div_ref, DivAssign, div_assign);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-*n, *d)),
            Repr::Big(r) => Rational::from_big(-r),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::one(), |acc, x| acc * x)
    }
}
