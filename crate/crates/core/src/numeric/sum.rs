//! Accumulators for long sums of rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Quad, Rational};

/// Exact running sum kept as an unreduced fraction.
///
/// Adding a term whose denominator already divides the running denominator
/// costs one multiply-add; otherwise the denominator grows to the lcm.
#[derive(Clone, Debug)]
pub struct ExactSum {
    num: BigInt,
    den: BigInt,
}

impl Default for ExactSum {
    fn default() -> Self {
        ExactSum { num: BigInt::zero(), den: BigInt::one() }
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_parts(&mut self, n: &BigInt, d: &BigInt) {
        if n.is_zero() {
            return;
        }
        let (q, r) = self.den.div_rem(d);
        if r.is_zero() {
            self.num += n * q;
            return;
        }
        let g = self.den.gcd(d);
        let dg = d / &g;
        self.num = &self.num * &dg + n * (&self.den / &g);
        self.den *= dg;
    }

    pub fn add(&mut self, r: &Rational) {
        match r.as_small() {
            Some((n, d)) => self.add_parts(&BigInt::from(n), &BigInt::from(d)),
            None => self.add_parts(&r.numer(), &r.denom()),
        }
    }

    pub fn merge(&mut self, other: &ExactSum) {
        self.add_parts(&other.num, &other.den);
    }

    pub fn value(&self) -> Rational {
        Rational::new(self.num.clone(), self.den.clone())
    }
}

/// Certified enclosure `[lo, hi]·2^-scale` of a sum, each term rounded outward.
#[derive(Clone, Debug)]
pub struct FixedSum {
    lo: BigInt,
    hi: BigInt,
    scale: u32,
}

impl FixedSum {
    pub fn new(scale: u32) -> Self {
        FixedSum { lo: BigInt::zero(), hi: BigInt::zero(), scale }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn add(&mut self, r: &Rational) {
        let n = r.numer() << self.scale as usize;
        let d = r.denom();
        let f = n.div_floor(&d);
        if (&f * &d) == n {
            self.hi += &f;
        } else {
            self.hi += &f + 1;
        }
        self.lo += f;
    }

    pub fn add_quad(&mut self, x: &Quad) {
        if let Some(r) = x.as_rational() {
            return self.add(r);
        }
        let s = x.scale(&Rational::from_integer(BigInt::one() << self.scale as usize));
        let f = s.floor();
        self.hi += &f + 1;
        self.lo += f;
    }

    /// Adds raw scaled bounds.
    pub fn add_scaled(&mut self, lo: &BigInt, hi: &BigInt) {
        self.lo += lo;
        self.hi += hi;
    }

    pub fn merge(&mut self, other: &FixedSum) {
        assert_eq!(self.scale, other.scale);
        self.lo += &other.lo;
        self.hi += &other.hi;
    }

    pub fn lo(&self) -> Rational {
        Rational::new(self.lo.clone(), BigInt::one() << self.scale as usize)
    }

    pub fn hi(&self) -> Rational {
        Rational::new(self.hi.clone(), BigInt::one() << self.scale as usize)
    }
}
