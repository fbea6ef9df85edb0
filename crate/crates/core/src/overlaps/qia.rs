//! `ρ(Q) = Σ_{q,r ≤ Q} meas(A′_q ∩ A′_r) / Ψ(Q)²` for a fixed exact `γ`.
//!
//! Each pair is reduced to a handful of integer counters over the admissible
//! offsets `T = gk` (see the parent module), and the pair measure is then
//! `(X + Y√N)/(M·q·r)` for integers `X, Y, M`. Pair measures are accumulated
//! as outward-rounded fixed-point numbers at scale `2^-64` in `i128`, so the
//! reported numerator is a certified interval of width a few ulps per pair.
//! Pairs whose integers would overflow fall back to exact [`Quad`] arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::{sq_bits, Bitset, Geometry};
use crate::error::{Error, Result};
use crate::numeric::{gcd_u64, isqrt_u128, ExactSum, Quad, Rational};
use crate::par::Exec;
use crate::scenarios::PsiSpec;
use crate::schmidt::{mod_inverse, GammaValue};

const SCALE_BITS: u32 = 64;

/// One grid point of the sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QiaRow {
    pub q_max: u64,
    /// `Ψ(Q) = Σ_{q ≤ Q} ψ(q)`, exact.
    pub psi_sum: Rational,
    /// Bounds on `Σ_{q,r ≤ Q} meas(A′_q ∩ A′_r)`, diagonal included.
    pub pair_lo: Rational,
    pub pair_hi: Rational,
    pub rho_lo: Rational,
    pub rho_hi: Rational,
}

impl QiaRow {
    pub fn rho_mid(&self) -> Rational {
        (&self.rho_lo + &self.rho_hi) * Rational::new(1, 2)
    }

    pub fn pair_mid(&self) -> Rational {
        (&self.pair_lo + &self.pair_hi) * Rational::new(1, 2)
    }
}

fn fdiv(a: i128, b: i128) -> i128 {
    Integer::div_floor(&a, &b)
}

fn cdiv(a: i128, b: i128) -> i128 {
    -Integer::div_floor(&-a, &b)
}

/// `γ = xn/xd + (yn/yd)·√n` with `s = floor(√n·2^64)`.
#[derive(Clone, Copy, Debug)]
struct Parts {
    xn: i128,
    xd: i128,
    yn: i128,
    yd: i128,
    n: u64,
    s: i128,
    m2: i128,
}

impl Parts {
    fn of(g: &Quad) -> Option<Parts> {
        let (x, y) = (g.rational_part(), g.irrational_part());
        let xn = x.numer().to_i128()?;
        let xd = x.denom().to_i128()?;
        let yn = y.numer().to_i128()?;
        let yd = y.denom().to_i128()?;
        let n = g.radicand();
        let s = if n == 0 { 0 } else { (BigInt::from(n) << 128usize).sqrt().to_i128()? };
        let m2 = xd.lcm(&yd);
        if xd > 1 << 40 || yd > 1 << 40 || m2 > 1 << 40 {
            return None;
        }
        Some(Parts { xn, xd, yn, yd, n, s, m2 })
    }
}

struct Ctx {
    gamma: Quad,
    parts: Option<Parts>,
    /// `ψ̃(q) = min(ψ(q), 1/2)` as a reduced fraction, index `q`.
    radius: Vec<(i128, i128)>,
    radius_q: Vec<Rational>,
    masks: Vec<Bitset>,
}

/// Region counters over the offsets of one pair.
#[derive(Default, Debug, PartialEq, Eq)]
struct Counters {
    cf: i128,
    cp: i128,
    cn: i128,
    kp: i128,
    kn: i128,
}

impl Ctx {
    /// Admissible centre pairs at `T = gk` for each `k` in `[k0, k1]`,
    /// tallied into the three regions.
    fn count(&self, q: u64, r: u64, k0: i128, k1: i128, kf_lo: i128, kf_hi: i128) -> Counters {
        let mut c = Counters::default();
        if k1 < k0 {
            return c;
        }
        let (sq, sr) = (&self.masks[q as usize], &self.masks[r as usize]);
        let g = gcd_u64(q, r) as i128;
        let (q, r) = (q as i128, r as i128);
        let (qp, rp) = (q / g, r / g);
        let u = mod_inverse((rp % qp) as u64, qp as u64).unwrap_or(0) as i128;
        let db1 = (r * u - g) / q;
        let mut a0 = k0.rem_euclid(qp) * u % qp;
        let mut b0 = (r * a0 - g * k0) / q;
        for k in k0..=k1 {
            let mut cnt = 0i128;
            let mut bb = b0.rem_euclid(r);
            let mut a = a0;
            for _ in 0..g {
                if sq.get(a as usize) && sr.get(bb as usize) {
                    cnt += 1;
                }
                a += qp;
                bb += rp;
                if bb >= r {
                    bb -= r;
                }
            }
            if cnt > 0 {
                if k < kf_lo {
                    c.cn += cnt;
                    c.kn += cnt * k;
                } else if k > kf_hi {
                    c.cp += cnt;
                    c.kp += cnt * k;
                } else {
                    c.cf += cnt;
                }
            }
            a0 += u;
            b0 += db1;
            if a0 >= qp {
                a0 -= qp;
                b0 -= rp;
            }
        }
        c
    }

    /// Fixed-point bounds on `meas(A′_q ∩ A′_r)·2^64`, or `None` on overflow.
    fn pair_fast(&self, q: u64, r: u64) -> Option<(i128, i128)> {
        let p = self.parts?;
        let (a1, b1) = self.radius[q as usize];
        let (a2, b2) = self.radius[r as usize];
        let g = gcd_u64(q, r) as i128;
        let (qi, ri) = (q as i128, r as i128);
        let m = b1.lcm(&b2).checked_mul(p.m2)?;
        let hq = a1.checked_mul(m / b1)?.checked_mul(ri)?;
        let hr = a2.checked_mul(m / b2)?.checked_mul(qi)?;
        let mw = hq.checked_add(hr)?;
        if mw == 0 {
            return Some((0, 0));
        }
        let me = (hq - hr).abs();
        let ml = 2 * hq.min(hr);
        let dr = ri - qi;
        let cr = dr.checked_mul(p.xn)?.checked_mul(m / p.xd)?;
        let ci = dr.checked_mul(p.yn)?.checked_mul(m / p.yd)?;
        let (fz, fzp) = if ci == 0 || p.n == 0 {
            (0, 0)
        } else {
            let sq = (ci.unsigned_abs()).checked_mul(ci.unsigned_abs())?.checked_mul(p.n as u128)?;
            let t = isqrt_u128(sq) as i128;
            if ci > 0 {
                (-t - 1, t)
            } else {
                (t, -t - 1)
            }
        };
        let mg = m.checked_mul(g)?;
        let kf_hi = fdiv(me - cr + fz, mg);
        let kp_hi = fdiv(mw - cr + fz, mg);
        let kf_lo = -fdiv(me + cr + fzp, mg);
        let kn_lo = -fdiv(mw + cr + fzp, mg);
        let c = self.count(q, r, kn_lo, kp_hi, kf_lo, kf_hi);
        let x = ml
            .checked_mul(c.cf)?
            .checked_add(mw.checked_mul(c.cp + c.cn)?)?
            .checked_sub(mg.checked_mul(c.kp - c.kn)?)?
            .checked_sub(cr.checked_mul(c.cp - c.cn)?)?;
        let y = -ci.checked_mul(c.cp - c.cn)?;
        let den = m.checked_mul(qi)?.checked_mul(ri)?;
        let xs = x.checked_mul(1i128 << SCALE_BITS)?;
        let (ylo, yhi) = if y == 0 {
            (0, 0)
        } else if y > 0 {
            (y.checked_mul(p.s)?, y.checked_mul(p.s + 1)?)
        } else {
            (y.checked_mul(p.s + 1)?, y.checked_mul(p.s)?)
        };
        Some((fdiv(xs.checked_add(ylo)?, den), cdiv(xs.checked_add(yhi)?, den)))
    }

    /// Exact `meas(A′_q ∩ A′_r)`, term by term.
    fn pair_exact(&self, q: u64, r: u64) -> Quad {
        restricted_pair_measure(
            q,
            r,
            &self.radius_q[q as usize],
            &self.radius_q[r as usize],
            &self.gamma,
            &self.masks[q as usize],
            &self.masks[r as usize],
        )
    }

    fn pair_fixed(&self, q: u64, r: u64) -> (i128, i128) {
        if let Some(v) = self.pair_fast(q, r) {
            return v;
        }
        to_fixed(&self.pair_exact(q, r))
    }

    fn diag(&self, q: u64) -> (i128, i128) {
        let (a, b) = self.radius[q as usize];
        let num = self.masks[q as usize].count() as i128 * 2 * a;
        let den = b * q as i128;
        match num.checked_mul(1i128 << SCALE_BITS) {
            Some(n) => (fdiv(n, den), cdiv(n, den)),
            None => to_fixed(&Quad::from(Rational::from_i128(num, den))),
        }
    }

    /// `meas(A′_q) + 2·Σ_{r < q} meas(A′_q ∩ A′_r)` at scale `2^64`.
    fn row(&self, q: u64, exact: bool) -> (i128, i128) {
        let (mut lo, mut hi) = self.diag(q);
        for r in 1..q {
            let (a, b) = if exact { to_fixed(&self.pair_exact(q, r)) } else { self.pair_fixed(q, r) };
            lo += 2 * a;
            hi += 2 * b;
        }
        (lo, hi)
    }
}

fn to_fixed(x: &Quad) -> (i128, i128) {
    let s = x.scale(&Rational::from_integer(BigInt::from(1u8) << SCALE_BITS as usize));
    let lo = s.floor().to_i128().expect("pair measure fits");
    let hi = if s.as_rational().is_some_and(|v| v.is_integer()) { lo } else { lo + 1 };
    (lo, hi)
}

/// `meas(A′_q ∩ A′_r)` for arcs restricted to the residues in two bitmaps.
pub fn restricted_pair_measure(
    q: u64,
    r: u64,
    psi_q: &Rational,
    psi_r: &Rational,
    gamma: &Quad,
    sq: &Bitset,
    sr: &Bitset,
) -> Quad {
    let geo = Geometry::new(q, r, psi_q, psi_r, gamma, gamma);
    if geo.w.is_zero() {
        return Quad::zero();
    }
    let (kn, _, _, kp) = geo.ranges();
    let g = geo.g as i128;
    let (qp, rp) = (q as i128 / g, r as i128 / g);
    let u = mod_inverse((rp % qp) as u64, qp as u64).unwrap_or(0) as i128;
    let mut acc = Quad::zero();
    for k in kn..=kp {
        let t = g * k;
        let a0 = k.rem_euclid(qp) * u % qp;
        let b0 = (r as i128 * a0 - t) / q as i128;
        let cnt = (0..g)
            .filter(|&j| sq.get((a0 + j * qp) as usize) && sr.get((b0 + j * rp).rem_euclid(r as i128) as usize))
            .count();
        if cnt > 0 {
            let x = &Quad::from(Rational::from_i128(t, 1)) + &geo.d0;
            acc = &acc + &geo.trapezoid(&x).scale(&Rational::from(cnt as u64));
        }
    }
    acc.scale(&Rational::new(1, q * r))
}

fn build_ctx(q_max: u64, psi: &PsiSpec, gamma: &GammaValue, exec: Exec) -> Result<(Ctx, Vec<Rational>)> {
    let gq = gamma.exact().ok_or_else(|| Error::Invalid("QIA needs an exact γ".into()))?;
    if q_max == 0 {
        return Err(Error::Invalid("Q must be positive".into()));
    }
    let mut psis = Vec::with_capacity(q_max as usize + 1);
    psis.push(Rational::zero());
    for q in 1..=q_max {
        let v = psi.rational(q)?;
        if v > Rational::new(1, q) {
            return Err(Error::Hypothesis(format!("ψ({q}) = {v} exceeds 1/{q}; use a clamped ψ")));
        }
        psis.push(v);
    }
    if psis[1..].windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Hypothesis(format!("ψ = {psi} is not decreasing on [1, {q_max}]")));
    }
    let half = Rational::new(1, 2);
    let radius_q: Vec<Rational> = psis.iter().map(|v| v.clone().min(half.clone())).collect();
    let mut radius = Vec::with_capacity(radius_q.len());
    for v in &radius_q {
        let n = v.numer().to_i128().ok_or_else(|| Error::Invalid("ψ numerator too large".into()))?;
        let d = v.denom().to_i128().ok_or_else(|| Error::Invalid("ψ denominator too large".into()))?;
        radius.push((n, d));
    }
    let masks = exec.map_range(0, q_max + 1, |q| {
        if q == 0 {
            return Ok(Bitset::from_bools(&[]));
        }
        let mut g = gamma.clone();
        sq_bits(q, &mut g).map(|(_, b)| b)
    });
    let masks = masks.into_iter().collect::<Result<Vec<_>>>()?;
    let parts = Parts::of(&gq);
    Ok((Ctx { gamma: gq, parts, radius, radius_q, masks }, psis))
}

fn sweep(psi: &PsiSpec, gamma: &GammaValue, grid: &[u64], exec: Exec, exact: bool) -> Result<Vec<QiaRow>> {
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("Q grid must be strictly increasing".into()));
    }
    let top = *grid.last().unwrap();
    let (ctx, psis) = build_ctx(top, psi, gamma, exec)?;
    let rows = exec.map_range(1, top + 1, |q| ctx.row(q, exact));
    let scale = Rational::from_integer(BigInt::from(1u8) << SCALE_BITS as usize);
    let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
    let mut psi_sum = ExactSum::new();
    let mut out = Vec::with_capacity(grid.len());
    let mut gi = 0;
    for q in 1..=top {
        let (a, b) = rows[q as usize - 1];
        lo += a;
        hi += b;
        psi_sum.add(&psis[q as usize]);
        if q == grid[gi] {
            let s = psi_sum.value();
            let s2 = &s * &s;
            let pair_lo = Rational::from_integer(lo.clone()) / &scale;
            let pair_hi = Rational::from_integer(hi.clone()) / &scale;
            let (rho_lo, rho_hi) = if s2.is_zero() {
                (Rational::zero(), Rational::zero())
            } else {
                (&pair_lo / &s2, &pair_hi / &s2)
            };
            out.push(QiaRow { q_max: q, psi_sum: s, pair_lo, pair_hi, rho_lo, rho_hi });
            gi += 1;
        }
    }
    Ok(out)
}

/// `ρ(Q)` at every point of an increasing grid, from one sweep.
pub fn qia_sweep(psi: &PsiSpec, gamma: &GammaValue, grid: &[u64], exec: Exec) -> Result<Vec<QiaRow>> {
    sweep(psi, gamma, grid, exec, false)
}

/// [`qia_sweep`] with every pair measure computed exactly before rounding.
pub fn qia_sweep_generic(psi: &PsiSpec, gamma: &GammaValue, grid: &[u64], exec: Exec) -> Result<Vec<QiaRow>> {
    sweep(psi, gamma, grid, exec, true)
}

pub fn qia_ratio(q_max: u64, psi: &PsiSpec, gamma: &GammaValue) -> Result<QiaRow> {
    Ok(qia_sweep(psi, gamma, &[q_max], Exec::default())?.pop().unwrap())
}
