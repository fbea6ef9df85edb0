//! Continued fractions, the per-`q` rational approximation `A/B` of `γ`, the
//! residue sets `S(q)` and the restricted target sets.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::arithfn::{euler_phi, prime_divisors};
use crate::error::{Error, Result};
use crate::exactsets::{build_aq_enclosed, build_aq_restricted, CircleIntervalSet, EnclosedAq};
use crate::numeric::{gcd_u64, isqrt_u128, Quad, Rational, RealEnclosure, MAX_REFINE_BITS};

/// An inhomogeneous parameter.
#[derive(Clone)]
pub enum GammaValue {
    Rational(Rational),
    Surd(Quad),
    Enclosure(RealEnclosure),
}

impl fmt::Debug for GammaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaValue::Rational(r) => write!(f, "{r}"),
            GammaValue::Surd(q) => write!(f, "{q}"),
            GammaValue::Enclosure(e) => write!(f, "{e:?}"),
        }
    }
}

impl From<Rational> for GammaValue {
    fn from(r: Rational) -> Self {
        GammaValue::Rational(r)
    }
}

impl From<Quad> for GammaValue {
    fn from(q: Quad) -> Self {
        match q.as_rational() {
            Some(r) => GammaValue::Rational(r.clone()),
            None => GammaValue::Surd(q),
        }
    }
}

impl GammaValue {
    /// Exact value, if this is not an enclosure.
    pub fn exact(&self) -> Option<Quad> {
        match self {
            GammaValue::Rational(r) => Some(Quad::from(r.clone())),
            GammaValue::Surd(q) => Some(q.clone()),
            GammaValue::Enclosure(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            GammaValue::Rational(r) => r.to_f64(),
            GammaValue::Surd(q) => q.to_f64(),
            GammaValue::Enclosure(e) => (e.lo().to_f64() + e.hi().to_f64()) / 2.0,
        }
    }
}

/// Partial quotients of an exact value, stopping once the convergent
/// denominator passes `bound`.
fn exact_convergents(x: &Quad, bound: u64) -> Vec<(BigInt, BigInt)> {
    let bound = BigInt::from(bound);
    let mut x = x.clone();
    let a0 = x.floor();
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (a0.clone(), BigInt::one());
    let mut out = vec![(p1.clone(), q1.clone())];
    let mut frac = &x - &Quad::from(Rational::from_integer(a0));
    while !frac.is_zero() {
        x = frac.recip();
        let a = x.floor();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > bound {
            break;
        }
        out.push((p2.clone(), q2.clone()));
        frac = &x - &Quad::from(Rational::from_integer(a));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

/// Partial quotients of a rational, all of them.
fn rational_quotients(r: &Rational, max_len: usize) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut x = r.clone();
    loop {
        let a = x.floor();
        out.push(a.clone());
        let frac = &x - &Rational::from_integer(a);
        if frac.is_zero() || out.len() >= max_len {
            return out;
        }
        x = frac.recip();
    }
}

/// Convergents `(A, B)` with `B ≤ denom_bound`, in increasing `B`.
///
/// For an enclosure only partial quotients shared by both ends (less one,
/// since the last shared quotient of a terminating expansion is ambiguous)
/// are used, refining up to the cap until a denominator passes the bound.
pub fn cf_convergents(gamma: &mut GammaValue, denom_bound: u64) -> Result<Vec<(BigInt, BigInt)>> {
    if denom_bound == 0 {
        return Err(Error::Invalid("denominator bound must be at least 1".into()));
    }
    if let Some(x) = gamma.exact() {
        return Ok(exact_convergents(&x, denom_bound));
    }
    let GammaValue::Enclosure(e) = gamma else { unreachable!() };
    let bound = BigInt::from(denom_bound);
    loop {
        let max_len = 4 * e.bits() as usize + 8;
        let ql = rational_quotients(e.lo(), max_len);
        let qh = rational_quotients(e.hi(), max_len);
        let common = ql.iter().zip(&qh).take_while(|(a, b)| a == b).count();
        let usable = &ql[..common.saturating_sub(1)];
        let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
        let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
        let mut out = Vec::new();
        let mut done = false;
        for a in usable {
            let (p2, q2) = (a * &p1 + &p0, a * &q1 + &q0);
            if q2 > bound {
                done = true;
                break;
            }
            out.push((p2.clone(), q2.clone()));
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
        }
        if done {
            return Ok(out);
        }
        if e.bits() >= MAX_REFINE_BITS {
            return Err(Error::Precision(format!(
                "enclosure {e:?} cannot fix the continued fraction up to denominator {denom_bound}"
            )));
        }
        e.refine_bits((e.bits() * 2).min(MAX_REFINE_BITS))?;
    }
}

/// The per-`q` approximation: `1 ≤ B ≤ √q`, `|γ − A/B| ≤ err_bound`, and
/// `err_bound·√q·B < 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchmidtApprox {
    pub q: u64,
    pub a: i64,
    pub b: u64,
    pub err_bound: Rational,
}

impl SchmidtApprox {
    /// Re-checks every invariant exactly.
    pub fn certify(&self) -> bool {
        let b = self.b as u128;
        let root = isqrt_u128(self.q as u128);
        self.b >= 1
            && b <= root
            && gcd_u64(self.a.unsigned_abs(), self.b) == 1
            && {
                let e = &self.err_bound;
                let s = e * e * Rational::from(self.q) * Rational::from(self.b * self.b);
                s < Rational::one()
            }
    }
}

/// The convergent of `γ` with the largest denominator `B ≤ √q`.
pub fn dirichlet_reduce(gamma: &mut GammaValue, q: u64) -> Result<SchmidtApprox> {
    if q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    let bound = isqrt_u128(q as u128) as u64;
    loop {
        let convs = cf_convergents(gamma, bound)?;
        let (a, b) = convs.last().cloned().expect("first convergent has B = 1");
        let ab = Rational::new(a.clone(), b.clone());
        let a = a.to_i64().ok_or_else(|| Error::Invalid("numerator exceeds i64".into()))?;
        let b = b.to_u64().unwrap();
        let qb2 = Rational::from(q) * Rational::from(b * b);
        let (holds, err) = match gamma {
            GammaValue::Enclosure(e) => {
                let err = (e.lo() - &ab).abs().max((e.hi() - &ab).abs());
                (&err * &err * &qb2 < Rational::one(), err)
            }
            _ => {
                let d = &gamma.exact().unwrap() - &Quad::from(ab.clone());
                let exact_ok = (&d * &d).scale(&qb2) < Quad::from(Rational::one());
                // A rational upper bound that still certifies.
                let mut bits = 64;
                let err = loop {
                    let (lo, hi) = d.enclose(bits);
                    let e = lo.abs().max(hi.abs());
                    if !exact_ok || &e * &e * &qb2 < Rational::one() || bits >= MAX_REFINE_BITS {
                        break e;
                    }
                    bits *= 2;
                };
                (exact_ok && &err * &err * &qb2 < Rational::one(), err)
            }
        };
        if holds {
            return Ok(SchmidtApprox { q, a, b, err_bound: err });
        }
        match gamma {
            GammaValue::Enclosure(e) if e.bits() < MAX_REFINE_BITS => {
                e.refine_bits((e.bits() * 2).min(MAX_REFINE_BITS))?;
            }
            _ => {
                return Err(Error::Precision(format!(
                    "cannot certify |γ − {a}/{b}| < 1/(√{q}·{b})"
                )))
            }
        }
    }
}

/// `S(q) = {a ∈ [0, q) : gcd(aB + A, q) = 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqSet {
    pub q: u64,
    pub members: Vec<u64>,
}

impl SqSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, a: u64) -> bool {
        self.members.binary_search(&a).is_ok()
    }

    /// Points `a/q`, sorted.
    pub fn points(&self) -> Vec<Rational> {
        self.members.iter().map(|&a| Rational::new(a, self.q)).collect()
    }
}

/// Membership bitmap of `S(q)`: exclude `a ≡ −A·B⁻¹ (mod p)` for each prime
/// `p | q` not dividing `B`.
pub fn sq_mask(q: u64, a: i64, b: u64) -> Vec<bool> {
    let mut keep = vec![true; q as usize];
    for p in prime_divisors(q) {
        if b % p == 0 {
            continue;
        }
        let binv = mod_inverse(b % p, p).expect("p does not divide B");
        let am = (a.rem_euclid(p as i64)) as u64;
        let r = ((p - am) % p) as u128 * binv as u128 % p as u128;
        let mut x = r as usize;
        while x < q as usize {
            keep[x] = false;
            x += p as usize;
        }
    }
    keep
}

pub fn build_sq(q: u64, red: &SchmidtApprox) -> Result<SqSet> {
    if red.q != q {
        return Err(Error::Invalid(format!("reduction is for q = {}, not {q}", red.q)));
    }
    let mask = sq_mask(q, red.a, red.b);
    let members: Vec<u64> = (0..q).filter(|&x| mask[x as usize]).collect();
    let phi = euler_phi(q);
    if (members.len() as u64) < phi {
        return Err(Error::Corrupt(format!("#S({q}) = {} < φ({q}) = {phi}", members.len())));
    }
    Ok(SqSet { q, members })
}

/// Same set by a gcd scan over every residue.
pub fn build_sq_scan(q: u64, red: &SchmidtApprox) -> SqSet {
    let members = (0..q)
        .filter(|&x| {
            let v = (x as i128 * red.b as i128 + red.a as i128).rem_euclid(q as i128) as u64;
            gcd_u64(v, q) == 1
        })
        .collect();
    SqSet { q, members }
}

/// `#S(q) = q·Π_{p | q, p ∤ B} (1 − 1/p)`.
pub fn sq_count(q: u64, b: u64) -> u64 {
    prime_divisors(q).into_iter().filter(|p| b % p != 0).fold(q, |acc, p| acc / p * (p - 1))
}

pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    if r0 != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// `A′_q = ∪_{a ∈ S(q)} ((a + γ − ψ)/q, (a + γ + ψ)/q)` for exact `γ`.
pub fn build_aq_prime(q: u64, psi: &Rational, gamma: &mut GammaValue) -> Result<CircleIntervalSet<Quad>> {
    let Some(g) = gamma.exact() else {
        return Err(Error::Invalid("enclosed γ: use build_aq_prime_enclosed".into()));
    };
    let red = dirichlet_reduce(gamma, q)?;
    let s = build_sq(q, &red)?;
    build_aq_restricted(q, &g, psi, &s.members)
}

/// `A′_q` for enclosed `γ`, with the error certificate of the enclosed build.
pub fn build_aq_prime_enclosed(
    q: u64,
    psi: &Rational,
    gamma: &mut RealEnclosure,
    precision: u32,
) -> Result<EnclosedAq> {
    let mut gv = GammaValue::Enclosure(gamma.clone());
    let red = dirichlet_reduce(&mut gv, q)?;
    let s = build_sq(q, &red)?;
    let full = build_aq_enclosed(q, gamma, psi, precision)?;
    let set = build_aq_restricted(q, gamma.lo(), psi, &s.members)?;
    Ok(EnclosedAq { set, set_error: full.set_error, measure_error: Rational::zero() })
}

/// `D*_n = max_i max(|x_i − (i−1)/n|, |x_i − i/n|)` for sorted points.
pub fn star_discrepancy(points: &[Rational]) -> Result<Rational> {
    if points.is_empty() {
        return Err(Error::Invalid("star discrepancy of an empty point set".into()));
    }
    let n = points.len() as u64;
    if points.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid("points must be sorted".into()));
    }
    let mut best = Rational::zero();
    for (i, x) in points.iter().enumerate() {
        let i = i as u64;
        let a = (x - &Rational::new(i, n)).abs();
        let b = (x - &Rational::new(i + 1, n)).abs();
        best = best.max(a).max(b);
    }
    Ok(best)
}

/// One row of the equidistribution table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquidistRow {
    pub q: u64,
    pub sq: u64,
    pub phi: u64,
    pub discrepancy: Rational,
}

pub fn equidist_row(q: u64, gamma: &mut GammaValue) -> Result<EquidistRow> {
    let red = dirichlet_reduce(gamma, q)?;
    let s = build_sq(q, &red)?;
    let d = star_discrepancy(&s.points())?;
    Ok(EquidistRow { q, sq: s.len() as u64, phi: euler_phi(q), discrepancy: d })
}
