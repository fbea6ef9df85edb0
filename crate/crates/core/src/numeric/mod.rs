//! Number types: exact rationals, quadratic surds, outward-rounded reals.

mod enclosure;
mod quad;
mod rational;
mod real;
mod sum;

pub use enclosure::{FnSource, RealEnclosure, RealSource, MAX_REFINE_BITS};
pub use quad::{isqrt_u128, Quad};
pub use rational::{gcd_u64, Rational};
pub use real::{hp, HpReal, DEFAULT_BITS};
pub use sum::{ExactSum, FixedSum};

use num_bigint::BigInt;
use std::fmt::Debug;

/// Exact ordered field elements that can serve as interval endpoints.
pub trait Scalar: Clone + Ord + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_rational(r: Rational) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul_rational(&self, r: &Rational) -> Self;
    fn floor(&self) -> BigInt;
    fn to_f64(&self) -> f64;

    fn one() -> Self {
        Self::from_rational(Rational::one())
    }
    fn from_integer(n: BigInt) -> Self {
        Self::from_rational(Rational::from_integer(n))
    }
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    /// `self - floor(self)`.
    fn fract(&self) -> Self {
        self.sub(&Self::from_integer(self.floor()))
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn from_rational(r: Rational) -> Self {
        r
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_rational(&self, r: &Rational) -> Self {
        self * r
    }
    fn floor(&self) -> BigInt {
        Rational::floor(self)
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn fract(&self) -> Self {
        Rational::fract(self)
    }
}

impl Scalar for Quad {
    fn zero() -> Self {
        Quad::zero()
    }
    fn from_rational(r: Rational) -> Self {
        Quad::from(r)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_rational(&self, r: &Rational) -> Self {
        self.scale(r)
    }
    fn floor(&self) -> BigInt {
        Quad::floor(self)
    }
    fn to_f64(&self) -> f64 {
        Quad::to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Quad::is_zero(self)
    }
}
