//! Outward-rounded fixed-point intervals.
//!
//! An [`HpReal`] is a pair of integers `lo ≤ hi` read as `[lo·2^-b, hi·2^-b]`.
//! Every operation returns an interval that contains the exact result of the
//! operation applied to any points of its inputs. Transcendental functions use
//! generous error terms on top of a wide working precision, so the enclosures
//! are a little looser than they could be but never wrong.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

pub const DEFAULT_BITS: u32 = 128;

#[derive(Clone, PartialEq, Eq)]
pub struct HpReal {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

fn shl(x: &BigInt, s: u32) -> BigInt {
    x << s as usize
}

fn floor_shr(x: &BigInt, s: u32) -> BigInt {
    // BigInt >> rounds toward negative infinity.
    x >> s as usize
}

fn ceil_shr(x: &BigInt, s: u32) -> BigInt {
    -((-x) >> s as usize)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// `atanh(num/den)·2^w` rounded down, with an error bound in ulps.
/// Requires `0 ≤ num/den ≤ 1/3`.
fn atanh_fixed(num: &BigInt, den: &BigInt, w: u32) -> (BigInt, BigInt) {
    let z = shl(num, w).div_floor(den);
    let z2 = floor_shr(&(&z * &z), w);
    let mut p = z.clone();
    let mut sum = z;
    let mut j: u64 = 1;
    while !p.is_zero() {
        p = floor_shr(&(&p * &z2), w);
        sum += &p / BigInt::from(2 * j + 1);
        j += 1;
    }
    (sum, BigInt::from(8 * (j + 2)))
}

/// `ln 2·2^w` with error in ulps.
fn ln2_fixed(w: u32) -> (BigInt, BigInt) {
    let (s, e) = atanh_fixed(&BigInt::one(), &BigInt::from(3), w);
    (s * 2, e * 2)
}

/// Bounds on `ln(m·2^-b)`, at scale `2^-w`. `m > 0`.
fn ln_point(m: &BigInt, b: u32, w: u32) -> (BigInt, BigInt) {
    let top = m.bits() as i64 - 1;
    let k = top - b as i64;
    let p = BigInt::one() << top as usize;
    let (s, e) = atanh_fixed(&(m - &p), &(m + &p), w);
    let (l2, e2) = ln2_fixed(w);
    let kk = BigInt::from(k);
    let mid = s * 2 + &l2 * &kk;
    let err = e * 2 + e2 * kk.abs() + 2;
    (&mid - &err, mid + err)
}

/// `exp(x·2^-w)·2^w` for `|x·2^-w| < 0.4`, rounded down, with error in ulps.
fn exp_small_fixed(x: &BigInt, w: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << w as usize;
    let mut term = one.clone();
    let mut sum = one;
    let mut j: u64 = 1;
    loop {
        term = floor_shr(&(&term * x), w).div_floor(&BigInt::from(j));
        if term.is_zero() || (term.abs() == BigInt::one() && j > 8) {
            break;
        }
        sum += &term;
        j += 1;
    }
    (sum, BigInt::from(4 * (j + 2)))
}

/// Bounds on `exp(m·2^-b)` at output scale `2^-bits`.
fn exp_point(m: &BigInt, b: u32, bits: u32) -> (BigInt, BigInt) {
    let approx = Rational::new(m.clone(), BigInt::one() << b as usize).to_f64();
    let n = (approx / std::f64::consts::LN_2).round() as i64;
    let w = bits + 96 + n.max(0) as u32 + (64 - n.unsigned_abs().leading_zeros());
    let v = if w >= b { shl(m, w - b) } else { floor_shr(m, b - w) };
    let (l2, e2) = ln2_fixed(w);
    let nn = BigInt::from(n);
    let r = &v - &l2 * &nn;
    let slack = e2 * nn.abs() + 1;
    let (tlo, elo) = exp_small_fixed(&(&r - &slack), w);
    let (thi, ehi) = exp_small_fixed(&(&r + &slack), w);
    let lo = tlo - elo;
    let hi = thi + ehi;
    // Multiply by 2^n and rescale from w to bits.
    let shift = w as i64 - bits as i64 - n;
    if shift >= 0 {
        (floor_shr(&lo, shift as u32), ceil_shr(&hi, shift as u32))
    } else {
        (shl(&lo, (-shift) as u32), shl(&hi, (-shift) as u32))
    }
}

impl HpReal {
    pub fn from_rational(r: &Rational, bits: u32) -> Self {
        let n = r.numer() << bits as usize;
        let d = r.denom();
        HpReal { lo: n.div_floor(&d), hi: ceil_div(&n, &d), bits }
    }

    pub fn from_int(n: i64, bits: u32) -> Self {
        let v = BigInt::from(n) << bits as usize;
        HpReal { lo: v.clone(), hi: v, bits }
    }

    /// Enclosure of `[lo, hi]`.
    pub fn from_bounds(lo: &Rational, hi: &Rational, bits: u32) -> Self {
        let a = HpReal::from_rational(lo, bits);
        let b = HpReal::from_rational(hi, bits);
        HpReal { lo: a.lo, hi: b.hi, bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo(&self) -> Rational {
        Rational::new(self.lo.clone(), BigInt::one() << self.bits as usize)
    }

    pub fn hi(&self) -> Rational {
        Rational::new(self.hi.clone(), BigInt::one() << self.bits as usize)
    }

    pub fn width(&self) -> Rational {
        Rational::new(&self.hi - &self.lo, BigInt::one() << self.bits as usize)
    }

    pub fn mid_f64(&self) -> f64 {
        let s = Rational::new(&self.lo + &self.hi, BigInt::one() << (self.bits as usize + 1));
        s.to_f64()
    }

    pub fn contains(&self, r: &Rational) -> bool {
        &self.lo() <= r && r <= &self.hi()
    }

    /// True when every point of `self` is below every point of `other`.
    pub fn certainly_lt(&self, other: &HpReal) -> bool {
        self.hi() < other.lo()
    }

    pub fn certainly_le_rational(&self, r: &Rational) -> bool {
        &self.hi() <= r
    }

    pub fn certainly_gt_rational(&self, r: &Rational) -> bool {
        &self.lo() > r
    }

    fn align(&self, other: &HpReal) -> (HpReal, HpReal) {
        let b = self.bits.max(other.bits);
        (self.with_bits(b), other.with_bits(b))
    }

    /// Same interval at a different scale; rounding outward when coarsening.
    pub fn with_bits(&self, bits: u32) -> HpReal {
        if bits >= self.bits {
            let s = bits - self.bits;
            HpReal { lo: shl(&self.lo, s), hi: shl(&self.hi, s), bits }
        } else {
            let s = self.bits - bits;
            HpReal { lo: floor_shr(&self.lo, s), hi: ceil_shr(&self.hi, s), bits }
        }
    }

    pub fn add(&self, other: &HpReal) -> HpReal {
        let (a, b) = self.align(other);
        HpReal { lo: a.lo + b.lo, hi: a.hi + b.hi, bits: a.bits }
    }

    pub fn sub(&self, other: &HpReal) -> HpReal {
        let (a, b) = self.align(other);
        HpReal { lo: a.lo - b.hi, hi: a.hi - b.lo, bits: a.bits }
    }

    pub fn neg(&self) -> HpReal {
        HpReal { lo: -&self.hi, hi: -&self.lo, bits: self.bits }
    }

    pub fn mul(&self, other: &HpReal) -> HpReal {
        let (a, b) = self.align(other);
        let c = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
        let mn = c.iter().min().unwrap();
        let mx = c.iter().max().unwrap();
        HpReal { lo: floor_shr(mn, a.bits), hi: ceil_shr(mx, a.bits), bits: a.bits }
    }

    pub fn mul_rational(&self, r: &Rational) -> HpReal {
        self.mul(&HpReal::from_rational(r, self.bits))
    }

    /// Panics when `other` straddles zero.
    pub fn div(&self, other: &HpReal) -> HpReal {
        let (a, b) = self.align(other);
        assert!(
            b.lo.sign() == b.hi.sign() && b.lo.sign() != Sign::NoSign,
            "division by an interval containing zero"
        );
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for x in [&a.lo, &a.hi] {
            for y in [&b.lo, &b.hi] {
                let n = shl(x, a.bits);
                let f = n.div_floor(y);
                let c = ceil_div(&n, y);
                lo = Some(match lo {
                    Some(l) if l <= f => l,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(h) if h >= c => h,
                    _ => c,
                });
            }
        }
        HpReal { lo: lo.unwrap(), hi: hi.unwrap(), bits: a.bits }
    }

    pub fn recip(&self) -> HpReal {
        HpReal::from_int(1, self.bits).div(self)
    }

    /// Negative parts of the interval are clamped to zero.
    pub fn sqrt(&self) -> HpReal {
        let b = self.bits;
        let clamp = |x: &BigInt| if x.is_negative() { BigInt::zero() } else { x.clone() };
        let lo = shl(&clamp(&self.lo), b).sqrt();
        let hn = shl(&clamp(&self.hi), b);
        let mut hi = hn.sqrt();
        if &hi * &hi != hn {
            hi += 1;
        }
        HpReal { lo, hi, bits: b }
    }

    /// Natural log; panics unless the interval is strictly positive.
    pub fn ln(&self) -> HpReal {
        assert!(self.lo.is_positive(), "logarithm of a non-positive interval");
        let w = self.bits + 64;
        let (lo, _) = ln_point(&self.lo, self.bits, w);
        let (_, hi) = ln_point(&self.hi, self.bits, w);
        HpReal { lo: floor_shr(&lo, 64), hi: ceil_shr(&hi, 64), bits: self.bits }
    }

    /// `max(1, ln x)`, with `x ≤ 0` treated as below `e`.
    pub fn log_clamped(&self) -> HpReal {
        let one = HpReal::from_int(1, self.bits);
        if !self.hi.is_positive() {
            return one;
        }
        let l = if self.lo.is_positive() {
            self.ln()
        } else {
            let (_, hi) = ln_point(&self.hi, self.bits, self.bits + 64);
            HpReal { lo: BigInt::zero(), hi: ceil_shr(&hi, 64), bits: self.bits }
        };
        l.max(&one)
    }

    pub fn exp(&self) -> HpReal {
        let (lo, _) = exp_point(&self.lo, self.bits, self.bits);
        let (_, hi) = exp_point(&self.hi, self.bits, self.bits);
        HpReal { lo, hi, bits: self.bits }
    }

    /// `x^e` for a strictly positive interval.
    pub fn pow_rational(&self, e: &Rational) -> HpReal {
        if e.is_zero() {
            return HpReal::from_int(1, self.bits);
        }
        if e.is_integer() {
            if let Some(k) = e.numer().to_i32() {
                return self.powi(k);
            }
        }
        self.ln().mul_rational(e).exp()
    }

    pub fn powi(&self, k: i32) -> HpReal {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut acc = HpReal::from_int(1, self.bits);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn max(&self, other: &HpReal) -> HpReal {
        let (a, b) = self.align(other);
        HpReal { lo: a.lo.max(b.lo), hi: a.hi.max(b.hi), bits: a.bits }
    }

    pub fn min(&self, other: &HpReal) -> HpReal {
        let (a, b) = self.align(other);
        HpReal { lo: a.lo.min(b.lo), hi: a.hi.min(b.hi), bits: a.bits }
    }

    /// Fixed-point decimal of the midpoint.
    pub fn to_decimal(&self, digits: usize) -> String {
        let m = Rational::new(&self.lo + &self.hi, BigInt::one() << (self.bits as usize + 1));
        m.to_decimal(digits)
    }
}

impl fmt::Debug for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo().to_decimal(20), self.hi().to_decimal(20))
    }
}

impl fmt::Display for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(12))
    }
}

/// Shorthand for an [`HpReal`] at the default precision.
pub fn hp(r: &Rational) -> HpReal {
    HpReal::from_rational(r, DEFAULT_BITS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hpf(x: f64) -> HpReal {
        // Exact dyadic conversion.
        let bits = 40;
        let m = (x * (1u64 << bits) as f64) as i64;
        HpReal::from_rational(&Rational::new(m, 1u64 << bits), 128)
    }

    #[test]
    fn ln_known_values() {
        let l = HpReal::from_int(2, 128).ln();
        assert!(l.contains(&"0.69314718055994530941723212145817".parse().unwrap()) || {
            let m = l.mid_f64();
            (m - std::f64::consts::LN_2).abs() < 1e-15
        });
        assert!(l.width() < Rational::pow2_neg(100));
        let l10 = HpReal::from_int(10, 128).ln();
        assert!((l10.mid_f64() - 10f64.ln()).abs() < 1e-14);
        assert!(HpReal::from_int(1, 128).ln().contains(&Rational::zero()));
    }

    #[test]
    fn exp_ln_roundtrip() {
        let x = HpReal::from_rational(&Rational::new(7, 3), 128);
        let y = x.ln().exp();
        assert!(y.contains(&Rational::new(7, 3)));
        assert!(y.width() < Rational::pow2_neg(90));
        let e = HpReal::from_int(1, 128).exp();
        assert!((e.mid_f64() - std::f64::consts::E).abs() < 1e-15);
        let big = HpReal::from_int(50, 128).exp();
        assert!((big.mid_f64() / 50f64.exp() - 1.0).abs() < 1e-14);
        let small = HpReal::from_int(-50, 128).exp();
        assert!((small.mid_f64() / (-50f64).exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sqrt_and_pow() {
        let two = HpReal::from_int(2, 128);
        let s = two.sqrt();
        assert!(s.mul(&s).contains(&Rational::from(2)));
        let q = HpReal::from_int(16, 128).pow_rational(&Rational::new(1, 4));
        assert!(q.contains(&Rational::from(2)));
        assert!(q.width() < Rational::pow2_neg(80));
    }

    #[test]
    fn clamped_log() {
        let l = HpReal::from_int(2, 128).log_clamped();
        assert_eq!(l.lo(), Rational::one());
        let l = HpReal::from_int(100, 128).log_clamped();
        assert!((l.mid_f64() - 100f64.ln()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn ln_encloses_float(x in 1e-6f64..1e6) {
            let v = hpf(x);
            let l = v.ln();
            let f = x.ln();
            prop_assert!(l.lo().to_f64() <= f + 1e-12 && f - 1e-12 <= l.hi().to_f64());
        }

        #[test]
        fn exp_encloses_float(x in -30f64..30.0) {
            let v = hpf(x);
            let e = v.exp();
            let f = x.exp();
            prop_assert!(e.lo().to_f64() <= f * (1.0 + 1e-12) && f * (1.0 - 1e-12) <= e.hi().to_f64());
        }

        #[test]
        fn mul_div_contain(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let x = Rational::new(a, b);
            let y = Rational::new(c, d);
            let hx = hp(&x);
            let hy = hp(&y);
            prop_assert!(hx.mul(&hy).contains(&(&x * &y)));
            if c != 0 {
                prop_assert!(hx.div(&hy).contains(&(&x / &y)));
            }
        }
    }
}
