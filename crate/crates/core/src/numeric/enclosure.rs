//! Refinable rational enclosures of real numbers.

use std::fmt;
use std::sync::Arc;

use super::{Quad, Rational};
use crate::error::{Error, Result};

/// Finest precision any enclosure is refined to before giving up.
pub const MAX_REFINE_BITS: u32 = 256;

/// Something that can be bracketed to any requested dyadic precision.
pub trait RealSource: Send + Sync {
    /// Rational bounds with `hi - lo ≤ 2^-bits`.
    fn bounds(&self, bits: u32) -> (Rational, Rational);
}

impl RealSource for Rational {
    fn bounds(&self, _bits: u32) -> (Rational, Rational) {
        (self.clone(), self.clone())
    }
}

impl RealSource for Quad {
    fn bounds(&self, bits: u32) -> (Rational, Rational) {
        self.enclose(bits)
    }
}

/// Wraps a closure as a source.
pub struct FnSource<F>(pub F);

impl<F: Fn(u32) -> (Rational, Rational) + Send + Sync> RealSource for FnSource<F> {
    fn bounds(&self, bits: u32) -> (Rational, Rational) {
        (self.0)(bits)
    }
}

#[derive(Clone)]
pub struct RealEnclosure {
    lo: Rational,
    hi: Rational,
    bits: u32,
    source: Arc<dyn RealSource>,
}

impl RealEnclosure {
    pub fn new(source: Arc<dyn RealSource>, bits: u32) -> Self {
        let (lo, hi) = source.bounds(bits);
        debug_assert!(lo <= hi);
        RealEnclosure { lo, hi, bits, source }
    }

    pub fn from_quad(q: &Quad, bits: u32) -> Self {
        Self::new(Arc::new(q.clone()), bits)
    }

    pub fn from_fn<F>(f: F, bits: u32) -> Self
    where
        F: Fn(u32) -> (Rational, Rational) + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnSource(f)), bits)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// Tightens to precision `2^-bits`; never widens.
    pub fn refine_bits(&mut self, bits: u32) -> Result<()> {
        if bits > MAX_REFINE_BITS {
            return Err(Error::Precision(format!(
                "refinement to 2^-{bits} exceeds the 2^-{MAX_REFINE_BITS} cap"
            )));
        }
        if bits <= self.bits {
            return Ok(());
        }
        let (lo, hi) = self.source.bounds(bits);
        if lo > self.lo {
            self.lo = lo;
        }
        if hi < self.hi {
            self.hi = hi;
        }
        self.bits = bits;
        Ok(())
    }

    /// Ensures `hi - lo ≤ eps`.
    pub fn refine(&mut self, eps: &Rational) -> Result<()> {
        if !eps.is_positive() {
            return Err(Error::Invalid("refinement tolerance must be positive".into()));
        }
        let mut bits = self.bits.max(1);
        while self.width() > *eps {
            bits = (bits * 2).min(MAX_REFINE_BITS + 1);
            self.refine_bits(bits)?;
        }
        Ok(())
    }

    /// Doubles the precision, failing at the cap.
    pub fn refine_once(&mut self) -> Result<()> {
        self.refine_bits((self.bits * 2).max(8))
    }
}

impl fmt::Debug for RealEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]@{}", self.lo.to_decimal(12), self.hi.to_decimal(12), self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_shrinks_and_contains() {
        let q = Quad::named("sqrt2-1").unwrap();
        let mut e = RealEnclosure::from_quad(&q, 8);
        let eps = Rational::pow2_neg(100);
        e.refine(&eps).unwrap();
        assert!(e.width() <= eps);
        assert!(Quad::from(e.lo().clone()) < q && q < Quad::from(e.hi().clone()));
    }

    #[test]
    fn cap_is_enforced() {
        let q = Quad::named("sqrt2").unwrap();
        let mut e = RealEnclosure::from_quad(&q, 8);
        assert!(e.refine(&Rational::pow2_neg(300)).is_err());
    }
}
