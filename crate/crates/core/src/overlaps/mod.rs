//! Pairwise intersection measures of target sets and the solution counters
//! behind the overlap estimates.
//!
//! For `A_q` with centres `(a + γ_q)/q` and half-width `ψ̃(q)/q`, scaling by
//! `qr` turns the distance between two centres into `X = ra − qb + D₀` with
//! `D₀ = rγ_q − qγ_r`, and the overlap of two arcs into a trapezoid `f(X)`:
//! flat at `L = 2·min(ψ̃_q r, ψ̃_r q)` for `|X| ≤ e = |ψ̃_q r − ψ̃_r q|`, then
//! falling linearly to zero at `W = ψ̃_q r + ψ̃_r q`. As `(a, b)` runs over
//! `Z_q × Z`, `ra − qb` hits every multiple of `g = gcd(q, r)` exactly `g`
//! times, so
//!
//! `meas(A_q ∩ A_r) = (g/qr)·Σ_{k ∈ Z} f(gk + D₀)`,
//!
//! a sum over at most `2W/g + 1` nonzero terms with a closed form.

pub mod qia;

use num_traits::ToPrimitive;

use crate::arithfn::divisors;
use crate::error::{Error, Result};
use crate::exactsets::build_aq;
use crate::numeric::{gcd_u64, HpReal, Quad, Rational, DEFAULT_BITS};
use crate::scenarios::{PsiSpec, TargetSeq};
use crate::schmidt::{dirichlet_reduce, mod_inverse, sq_mask, GammaValue, SchmidtApprox};

pub use qia::{qia_ratio, qia_sweep, qia_sweep_generic, QiaRow};

/// Membership bitmap over `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
    ones: usize,
}

impl Bitset {
    pub fn from_bools(b: &[bool]) -> Self {
        let mut words = vec![0u64; b.len().div_ceil(64)];
        let mut ones = 0;
        for (i, &x) in b.iter().enumerate() {
            if x {
                words[i >> 6] |= 1 << (i & 63);
                ones += 1;
            }
        }
        Bitset { words, len: b.len(), ones }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self) -> usize {
        self.ones
    }
}

/// `S(q)` as a bitmap, from the reduction of a fixed exact `γ`.
pub fn sq_bits(q: u64, gamma: &mut GammaValue) -> Result<(SchmidtApprox, Bitset)> {
    let red = dirichlet_reduce(gamma, q)?;
    let mask = sq_mask(q, red.a, red.b);
    Ok((red, Bitset::from_bools(&mask)))
}

fn q_of(n: i128) -> Quad {
    Quad::from(Rational::from_i128(n, 1))
}

fn floor_i128(x: &Quad) -> i128 {
    x.floor().to_i128().expect("floor fits in i128")
}

fn ceil_i128(x: &Quad) -> i128 {
    x.ceil().to_i128().expect("ceil fits in i128")
}

/// Scaled geometry of one pair.
#[derive(Clone, Debug)]
struct Geometry {
    g: u64,
    w: Rational,
    e: Rational,
    l: Rational,
    d0: Quad,
}

impl Geometry {
    fn new(q: u64, r: u64, psi_q: &Rational, psi_r: &Rational, gq: &Quad, gr: &Quad) -> Self {
        let hq = psi_q * &Rational::from(r);
        let hr = psi_r * &Rational::from(q);
        let d0 = &gq.scale(&Rational::from(r)) - &gr.scale(&Rational::from(q));
        Geometry {
            g: gcd_u64(q, r),
            w: &hq + &hr,
            e: (&hq - &hr).abs(),
            l: Rational::from(2) * hq.min(hr),
            d0,
        }
    }

    /// `f(X)` evaluated directly.
    fn trapezoid(&self, x: &Quad) -> Quad {
        let ax = x.abs();
        if ax <= Quad::from(self.e.clone()) {
            Quad::from(self.l.clone())
        } else if ax < Quad::from(self.w.clone()) {
            &Quad::from(self.w.clone()) - &ax
        } else {
            Quad::zero()
        }
    }

    /// `floor((c − D₀)/g)`.
    fn floor_shift(&self, c: &Rational) -> i128 {
        let x = (&Quad::from(c.clone()) - &self.d0).scale(&Rational::new(1, self.g));
        floor_i128(&x)
    }

    /// `ceil((c − D₀)/g)`.
    fn ceil_shift(&self, c: &Rational) -> i128 {
        let x = (&Quad::from(c.clone()) - &self.d0).scale(&Rational::new(1, self.g));
        ceil_i128(&x)
    }

    /// `(kn_lo, kf_lo, kf_hi, kp_hi)`: negative slope `[kn_lo, kf_lo)`,
    /// flat `[kf_lo, kf_hi]`, positive slope `(kf_hi, kp_hi]`.
    fn ranges(&self) -> (i128, i128, i128, i128) {
        (
            self.ceil_shift(&-&self.w),
            self.ceil_shift(&-&self.e),
            self.floor_shift(&self.e),
            self.floor_shift(&self.w),
        )
    }
}

fn sum_k(a: i128, b: i128) -> i128 {
    if b < a {
        0
    } else {
        (a + b) * (b - a + 1) / 2
    }
}

fn radii(q: u64, r: u64, psi: &PsiSpec) -> Result<(Rational, Rational)> {
    Ok((psi.set_radius(q)?, psi.set_radius(r)?))
}

/// Closed-form `meas(A_q ∩ A_r)` for rational radii and exact targets.
pub fn pair_measure_exact(q: u64, r: u64, psi_q: &Rational, psi_r: &Rational, gq: &Quad, gr: &Quad) -> Quad {
    let geo = Geometry::new(q, r, psi_q, psi_r, gq, gr);
    if geo.w.is_zero() {
        return Quad::zero();
    }
    let (kn, kf_lo, kf_hi, kp) = geo.ranges();
    let nf = (kf_hi - kf_lo + 1).max(0);
    let (p_lo, n_hi) = (kf_hi + 1, kf_lo - 1);
    let np = (kp - p_lo + 1).max(0);
    let nn = (n_hi - kn + 1).max(0);
    let sp = sum_k(p_lo, kp);
    let sn = sum_k(kn, n_hi);
    let g = geo.g as i128;
    let flat = Quad::from(&geo.l * &Rational::from_i128(nf, 1));
    let slopes = Quad::from(&geo.w * &Rational::from_i128(np + nn, 1));
    let total = &(&flat + &slopes) - &(&geo.d0.scale(&Rational::from_i128(np - nn, 1)) + &q_of(g * (sp - sn)));
    total.scale(&Rational::new(geo.g, q * r))
}

/// Exact `meas(A_q ∩ A_r)` for `ψ̃ = min(ψ, 1/2)`, by the closed form.
pub fn pair_measure(q: u64, r: u64, psi: &PsiSpec, gamma: &TargetSeq) -> Result<Quad> {
    let (pq, pr) = radii(q, r, psi)?;
    Ok(pair_measure_exact(q, r, &pq, &pr, &gamma.gamma(q), &gamma.gamma(r)))
}

/// The same measure summed term by term over every candidate centre offset.
pub fn pair_measure_enumerated(q: u64, r: u64, psi: &PsiSpec, gamma: &TargetSeq) -> Result<Quad> {
    let (pq, pr) = radii(q, r, psi)?;
    let geo = Geometry::new(q, r, &pq, &pr, &gamma.gamma(q), &gamma.gamma(r));
    let lo = geo.floor_shift(&-&geo.w) - 1;
    let hi = geo.ceil_shift(&geo.w) + 1;
    let mut acc = Quad::zero();
    for k in lo..=hi {
        let x = &q_of(geo.g as i128 * k) + &geo.d0;
        acc = &acc + &geo.trapezoid(&x);
    }
    Ok(acc.scale(&Rational::new(geo.g, q * r)))
}

/// The same measure by intersecting the two interval sets.
pub fn pair_measure_oracle(q: u64, r: u64, psi: &PsiSpec, gamma: &TargetSeq) -> Result<Quad> {
    let (pq, pr) = radii(q, r, psi)?;
    let a = build_aq(q, &gamma.gamma(q), &pq)?;
    let b = build_aq(r, &gamma.gamma(r), &pr)?;
    Ok(a.intersect(&b).measure().clone())
}

/// Certified bounds on `meas(A_q ∩ A_r)` when the targets are only known to
/// lie in `[lo, hi]`.
pub fn pair_measure_enclosed(
    q: u64,
    r: u64,
    psi: &PsiSpec,
    gq: (&Rational, &Rational),
    gr: (&Rational, &Rational),
) -> Result<(Rational, Rational)> {
    let (pq, pr) = radii(q, r, psi)?;
    let half = Rational::new(1, 2);
    let mq = (gq.0 + gq.1) * &half;
    let mr = (gr.0 + gr.1) * &half;
    let mid = pair_measure_exact(q, r, &pq, &pr, &Quad::from(mq), &Quad::from(mr));
    let mid = mid.as_rational().cloned().expect("rational midpoint");
    // D₀ moves by at most this much; Σ f has slope ≤ #sloped terms ≤ 2(W/g + 1).
    let shift = (gq.1 - gq.0) * &half * Rational::from(r) + (gr.1 - gr.0) * &half * Rational::from(q);
    let w = &pq * &Rational::from(r) + &pr * &Rational::from(q);
    let g = gcd_u64(q, r);
    let slope = Rational::from(2) * (&w * &Rational::new(1, g) + Rational::from(2));
    let err = shift * slope * Rational::new(g, q * r);
    let lo = (&mid - &err).max(Rational::zero());
    let cap = Rational::from(2) * pq.clone().min(pr.clone());
    Ok((lo, (&mid + &err).min(cap)))
}

/// One `(q, r)` row of the overlap check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairStats {
    pub q: u64,
    pub r: u64,
    pub g: u64,
    pub meas: Quad,
    /// `δ = min(2ψ̃(q)/q, 2ψ̃(r)/r)`.
    pub delta_min: Rational,
    /// `Δ = max(2ψ̃(q)/q, 2ψ̃(r)/r)`.
    pub delta_max: Rational,
    pub n_count: u64,
    /// `2·(2ψ̃(q))(2ψ̃(r)) + (g/q)·2ψ̃(q)`.
    pub bound_val: Rational,
    /// `meas ≤ bound_val`.
    pub verdict: bool,
    /// `meas ≤ δ·N`.
    pub delta_ok: bool,
    /// `N ≤ (2Δqr/g + 1)·g`.
    pub count_ok: bool,
}

impl PairStats {
    pub fn all_ok(&self) -> bool {
        self.verdict && self.delta_ok && self.count_ok
    }
}

pub fn overlap_bound_check(q: u64, r: u64, psi: &PsiSpec, gamma: &TargetSeq) -> Result<PairStats> {
    let (pq, pr) = radii(q, r, psi)?;
    let (gq, gr) = (gamma.gamma(q), gamma.gamma(r));
    let meas = pair_measure_exact(q, r, &pq, &pr, &gq, &gr);
    let two = Rational::from(2);
    let dq = &two * &pq / Rational::from(q);
    let dr = &two * &pr / Rational::from(r);
    let (delta_min, delta_max) = if dq <= dr { (dq, dr) } else { (dr, dq) };
    let g = gcd_u64(q, r);
    let n_count = count_n(q, r, &delta_max, &gq, &gr);
    let mq = &two * &pq;
    let bound_val = &two * &mq * (&two * &pr) + Rational::new(g, q) * &mq;
    let verdict = meas <= Quad::from(bound_val.clone());
    let delta_ok = meas <= Quad::from(&delta_min * &Rational::from(n_count));
    let nb = (&two * &delta_max * Rational::from(q * r) / Rational::from(g) + Rational::from(1)) * Rational::from(g);
    let count_ok = Rational::from(n_count) <= nb;
    Ok(PairStats { q, r, g, meas, delta_min, delta_max, n_count, bound_val, verdict, delta_ok, count_ok })
}

/// `N(q, r)`: pairs `(a, b) ∈ Z_q × Z_r` whose centres are within `Δ` on the
/// circle, i.e. `‖r(a + γ_q) − q(b + γ_r)‖_{qr} < Δqr`.
pub fn count_n(q: u64, r: u64, delta: &Rational, gq: &Quad, gr: &Quad) -> u64 {
    if delta.is_negative() || delta.is_zero() {
        return 0;
    }
    if delta * &Rational::from(2) > Rational::from(1) {
        return q * r;
    }
    let g = gcd_u64(q, r);
    let d0 = &gq.scale(&Rational::from(r)) - &gr.scale(&Rational::from(q));
    let t = Quad::from(delta * &Rational::from(q * r));
    let inv_g = Rational::new(1, g);
    // −t < gj + D₀ < t
    let lo = floor_i128(&(&(-&t) - &d0).scale(&inv_g)) + 1;
    let hi = ceil_i128(&(&t - &d0).scale(&inv_g)) - 1;
    ((hi - lo + 1).max(0) as u64) * g
}

/// `N(q, r)` by checking every pair's circle distance.
pub fn count_n_brute(q: u64, r: u64, delta: &Rational, gq: &Quad, gr: &Quad) -> u64 {
    let dq = Quad::from(delta.clone());
    let mut n = 0;
    for a in 0..q {
        let ca = (&q_of(a as i128) + gq).scale(&Rational::new(1, q));
        for b in 0..r {
            let cb = (&q_of(b as i128) + gr).scale(&Rational::new(1, r));
            let d = &ca - &cb;
            let f = &d - &q_of(floor_i128(&d));
            let dist = f.clone().min(&q_of(1) - &f);
            if dist < dq {
                n += 1;
            }
        }
    }
    n
}

fn fixed_exact(gamma: &GammaValue) -> Result<Quad> {
    gamma.exact().ok_or_else(|| Error::Invalid("this count needs an exact γ".into()))
}

/// `M(q, r) = #{(a, b) ∈ S(q) × S(r) : |(a + γ)r − (b + γ)q| < 2rψ(q)}`,
/// scanning for each `a` only the window of admissible `b`.
pub fn count_m(q: u64, r: u64, psi: &PsiSpec, gamma: &mut GammaValue) -> Result<u64> {
    let g = fixed_exact(gamma)?;
    let (_, sq) = sq_bits(q, gamma)?;
    let (_, sr) = sq_bits(r, gamma)?;
    count_m_masks(q, r, &psi.rational(q)?, &g, &sq, &sr)
}

fn count_m_masks(q: u64, r: u64, psi_q: &Rational, g: &Quad, sq: &Bitset, sr: &Bitset) -> Result<u64> {
    if psi_q.is_zero() {
        return Ok(0);
    }
    let t = Quad::from(Rational::from(2 * r) * psi_q);
    let inv_q = Rational::new(1, q);
    let mut n = 0;
    for a in (0..q).filter(|&a| sq.get(a as usize)) {
        let c = (&q_of(a as i128) + g).scale(&Rational::from(r));
        // b + γ ∈ ((c − t)/q, (c + t)/q)
        let lo = floor_i128(&(&(&c - &t).scale(&inv_q) - g)) + 1;
        let hi = ceil_i128(&(&(&c + &t).scale(&inv_q) - g)) - 1;
        for b in lo.max(0)..=hi.min(r as i128 - 1) {
            if sr.get(b as usize) {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// `M(q, r)` over the full product `S(q) × S(r)`.
pub fn count_m_brute(q: u64, r: u64, psi: &PsiSpec, gamma: &mut GammaValue) -> Result<u64> {
    let g = fixed_exact(gamma)?;
    let (_, sq) = sq_bits(q, gamma)?;
    let (_, sr) = sq_bits(r, gamma)?;
    let t = Quad::from(Rational::from(2 * r) * psi.rational(q)?);
    let mut n = 0;
    for a in (0..q).filter(|&a| sq.get(a as usize)) {
        for b in (0..r).filter(|&b| sr.get(b as usize)) {
            let x = &(&q_of(a as i128) + &g).scale(&Rational::from(r)) - &(&q_of(b as i128) + &g).scale(&Rational::from(q));
            if x.abs() < t {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// `g^{m/n}` threshold test `|x| < g^δ`, exact.
struct Threshold {
    g: u64,
    m: i32,
    n: u32,
    approx: f64,
}

impl Threshold {
    fn new(g: u64, delta: &Rational) -> Result<Self> {
        if delta.is_negative() || delta.is_zero() || *delta > Rational::new(1, 4) {
            return Err(Error::Invalid(format!("δ = {delta} must lie in (0, 1/4]")));
        }
        let m = delta.numer().to_i32().unwrap();
        let n = delta.denom().to_u32().unwrap();
        Ok(Threshold { g, m, n, approx: (g as f64).powf(delta.to_f64()) })
    }

    fn below(&self, x: &Quad, x_f64: f64) -> bool {
        let ax = x_f64.abs();
        if ax < self.approx * (1.0 - 1e-9) {
            return true;
        }
        if ax > self.approx * (1.0 + 1e-9) + 1e-12 {
            return false;
        }
        // |x|^n < g^m, both sides nonnegative.
        let lhs = x.abs().pow(self.n);
        lhs < Quad::from(Rational::from(self.g).pow(self.m))
    }
}

/// `N_δ(q, r) = #{(a, b) : a ∈ S(q), 0 ≤ b < r, |(a + γ)r − (b + γ)q| < g^δ}`.
///
/// Only offsets `T = ra − qb = gk` with `|gk + γ(r − q)| < g^δ` can occur; for
/// each one the `g` solutions `a ≡ k·(r/g)⁻¹ (mod q/g)` are checked directly.
pub fn count_ndelta(q: u64, r: u64, delta: &Rational, gamma: &mut GammaValue) -> Result<u64> {
    let gv = fixed_exact(gamma)?;
    let (_, sq) = sq_bits(q, gamma)?;
    count_ndelta_mask(q, r, delta, &gv, &sq)
}

pub(crate) fn count_ndelta_mask(q: u64, r: u64, delta: &Rational, gv: &Quad, sq: &Bitset) -> Result<u64> {
    let g = gcd_u64(q, r);
    let th = Threshold::new(g, delta)?;
    let (qp, rp) = (q / g, r / g);
    let u = mod_inverse(rp % qp, qp).unwrap_or(0);
    let c = gv.scale(&Rational::from_i128(r as i128 - q as i128, 1));
    let cf = c.to_f64();
    let span = th.approx + 1.0;
    let k_lo = ((-span - cf) / g as f64).floor() as i128 - 1;
    let k_hi = ((span - cf) / g as f64).ceil() as i128 + 1;
    let mut n = 0;
    for k in k_lo..=k_hi {
        let t = g as i128 * k;
        let xf = t as f64 + cf;
        if xf.abs() > span + 1.0 {
            continue;
        }
        if !th.below(&(&q_of(t) + &c), xf) {
            continue;
        }
        let a0 = (k.rem_euclid(qp as i128) as u128 * u as u128 % qp as u128) as i128;
        for j in 0..g as i128 {
            let a = a0 + j * qp as i128;
            let num = r as i128 * a - t;
            debug_assert_eq!(num % q as i128, 0);
            let b = num / q as i128;
            if (0..r as i128).contains(&b) && sq.get(a as usize) {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// `N_δ(q, r)` over every `a ∈ S(q)` and `b ∈ [0, r)`.
pub fn count_ndelta_brute(q: u64, r: u64, delta: &Rational, gamma: &mut GammaValue) -> Result<u64> {
    let gv = fixed_exact(gamma)?;
    let (_, sq) = sq_bits(q, gamma)?;
    let th = Threshold::new(gcd_u64(q, r), delta)?;
    let mut n = 0;
    for a in (0..q).filter(|&a| sq.get(a as usize)) {
        for b in 0..r {
            let x = &(&q_of(a as i128) + &gv).scale(&Rational::from(r)) - &(&q_of(b as i128) + &gv).scale(&Rational::from(q));
            let lhs = x.abs().pow(th.n);
            if lhs < Quad::from(Rational::from(th.g).pow(th.m)) {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// One divisor row of the class-sum check.
#[derive(Clone, Debug)]
pub struct LemNRow {
    pub d: u64,
    /// Number of `r < q` with `gcd(q, r) = d`.
    pub classes: u64,
    /// `Σ_{r < q, gcd(q,r) = d} N_δ(q, r)`, exact.
    pub sum: u64,
    /// `q·d^{-1/4} + d`.
    pub reference: HpReal,
    /// Upper bound on `sum / reference`.
    pub ratio: Rational,
}

#[derive(Clone, Debug)]
pub struct LemNReport {
    pub q: u64,
    pub rows: Vec<LemNRow>,
    pub max_ratio: Rational,
}

pub fn lemn_verify(q: u64, delta: &Rational, gamma: &mut GammaValue) -> Result<LemNReport> {
    if q < 2 {
        return Err(Error::Invalid("q must be at least 2".into()));
    }
    let gv = fixed_exact(gamma)?;
    let (_, sq) = sq_bits(q, gamma)?;
    lemn_with_mask(q, delta, &gv, &sq)
}

pub(crate) fn lemn_with_mask(q: u64, delta: &Rational, gv: &Quad, sq: &Bitset) -> Result<LemNReport> {
    let ds = divisors(q);
    let mut sums = vec![0u64; ds.len()];
    let mut classes = vec![0u64; ds.len()];
    for r in 1..q {
        let g = gcd_u64(q, r);
        let i = ds.binary_search(&g).unwrap();
        sums[i] += count_ndelta_mask(q, r, delta, gv, sq)?;
        classes[i] += 1;
    }
    let quarter = Rational::new(1, 4);
    let qh = HpReal::from_int(q as i64, DEFAULT_BITS);
    let mut rows = Vec::with_capacity(ds.len());
    let mut max_ratio = Rational::zero();
    for (i, &d) in ds.iter().enumerate() {
        let dh = HpReal::from_int(d as i64, DEFAULT_BITS);
        let reference = qh.mul(&dh.pow_rational(&-&quarter)).add(&dh);
        let ratio = Rational::from(sums[i]) / reference.lo();
        if ratio > max_ratio {
            max_ratio = ratio.clone();
        }
        rows.push(LemNRow { d, classes: classes[i], sum: sums[i], reference, ratio });
    }
    Ok(LemNReport { q, rows, max_ratio })
}

/// [`lemn_verify`] for every `2 ≤ q ≤ q_max`.
pub fn lemn_sweep(q_max: u64, delta: &Rational, gamma: &GammaValue, exec: crate::par::Exec) -> Result<Vec<LemNReport>> {
    let gv = fixed_exact(gamma)?;
    let rows = exec.map_range(2, q_max + 1, |q| {
        let mut gm = gamma.clone();
        let (_, sq) = sq_bits(q, &mut gm)?;
        lemn_with_mask(q, delta, &gv, &sq)
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_i128(n as i128, d as i128)
    }

    fn rq(n: i64, d: i64) -> Quad {
        Quad::from(r(n, d))
    }

    fn sets() -> Vec<TargetSeq> {
        vec![
            TargetSeq::constant(r(0, 1)),
            TargetSeq::constant(r(1, 3)),
            TargetSeq::random(11),
            TargetSeq::Constant(Quad::named("sqrt2-1").unwrap()),
        ]
    }

    #[test]
    fn pair_examples() {
        let psi = PsiSpec::constant(r(1, 12));
        let g0 = TargetSeq::constant(r(0, 1));
        assert_eq!(pair_measure(6, 3, &psi, &g0).unwrap(), rq(1, 12));
        // γ_2 = 1/2 and γ_4 = 0.
        let psi8 = PsiSpec::constant(r(1, 8));
        let custom = TargetSeq::FiniteSet {
            values: vec![rq(0, 1), rq(1, 2)],
            assign: crate::scenarios::Assignment::Partition(crate::scenarios::PartitionSpec::custom("two", 2, |q| {
                if q == 2 {
                    2
                } else {
                    1
                }
            })),
        };
        assert_eq!(pair_measure(4, 2, &psi8, &custom).unwrap(), rq(1, 8));
        assert_eq!(pair_measure_oracle(4, 2, &psi8, &custom).unwrap(), rq(1, 8));
        let tiny = PsiSpec::constant(r(1, 100));
        assert_eq!(pair_measure(3, 2, &tiny, &g0).unwrap(), rq(1, 150));
    }

    #[test]
    fn overlap_examples() {
        let psi = PsiSpec::constant(r(1, 12));
        let s = overlap_bound_check(6, 3, &psi, &TargetSeq::constant(r(0, 1))).unwrap();
        assert_eq!(s.bound_val, r(5, 36));
        assert!(s.all_ok());
        let zero = PsiSpec::constant(r(0, 1));
        let s = overlap_bound_check(6, 3, &zero, &TargetSeq::constant(r(0, 1))).unwrap();
        assert_eq!(s.meas, Quad::zero());
        assert!(s.verdict);
    }

    #[test]
    fn count_n_examples() {
        let z = Quad::zero();
        assert_eq!(count_n(4, 2, &r(1, 8), &z, &z), 2);
        assert_eq!(count_n(5, 3, &r(1, 20), &z, &z), 1);
        assert_eq!(count_n(7, 3, &r(2, 1), &z, &z), 21);
        for (q, rr, d) in [(4, 2, r(1, 8)), (5, 3, r(1, 20)), (12, 8, r(1, 7)), (9, 6, r(1, 2))] {
            assert_eq!(count_n(q, rr, &d, &z, &z), count_n_brute(q, rr, &d, &z, &z));
        }
    }

    #[test]
    fn count_m_examples() {
        let psi = PsiSpec::constant(r(1, 8));
        let mut g = GammaValue::Rational(r(0, 1));
        assert_eq!(count_m(4, 2, &psi, &mut g).unwrap(), 0);
        let mut g = GammaValue::Rational(r(1, 3));
        let rec = PsiSpec::recip();
        assert_eq!(count_m(5, 2, &rec, &mut g).unwrap(), count_m_brute(5, 2, &rec, &mut g).unwrap());
        let zero = PsiSpec::constant(r(0, 1));
        assert_eq!(count_m(5, 2, &zero, &mut g).unwrap(), 0);
    }

    #[test]
    fn count_ndelta_examples() {
        let mut g = GammaValue::Rational(r(0, 1));
        assert_eq!(count_ndelta(6, 3, &r(1, 5), &mut g).unwrap(), 0);
        let mut h = GammaValue::Rational(r(1, 2));
        for q in 2..=50u64 {
            let a = count_ndelta(q, q - 1, &r(1, 5), &mut h).unwrap();
            assert_eq!(a, count_ndelta_brute(q, q - 1, &r(1, 5), &mut h).unwrap());
        }
        assert!(count_ndelta(6, 3, &r(1, 2), &mut g).is_err());
    }

    #[test]
    fn dual_paths_small_q() {
        let psi = PsiSpec::recip();
        for gamma in [GammaValue::Rational(r(0, 1)), GammaValue::Rational(r(2, 7)), GammaValue::from(Quad::named("sqrt2-1").unwrap())] {
            let mut g = gamma.clone();
            for q in 2..=64u64 {
                for rr in 1..q {
                    let a = count_m(q, rr, &psi, &mut g).unwrap();
                    let b = count_m_brute(q, rr, &psi, &mut g).unwrap();
                    assert_eq!(a, b, "M({q},{rr})");
                    let a = count_ndelta(q, rr, &r(1, 5), &mut g).unwrap();
                    let b = count_ndelta_brute(q, rr, &r(1, 5), &mut g).unwrap();
                    assert_eq!(a, b, "Nδ({q},{rr})");
                }
            }
        }
    }

    #[test]
    fn lemn_small() {
        let mut g = GammaValue::Rational(r(0, 1));
        let rep = lemn_verify(12, &r(1, 5), &mut g).unwrap();
        assert_eq!(rep.rows.len(), 6);
        assert_eq!(rep.rows.last().unwrap().sum, 0);
        assert_eq!(rep.rows.iter().map(|x| x.classes).sum::<u64>(), 11);
        let rep = lemn_verify(13, &r(1, 5), &mut g).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.rows[1].sum, 0);
    }

    #[test]
    fn oracle_equivalence_small() {
        let psi = PsiSpec::recip();
        for gamma in sets() {
            for q in 2..=40u64 {
                for rr in 1..q {
                    let fast = pair_measure(q, rr, &psi, &gamma).unwrap();
                    assert_eq!(fast, pair_measure_enumerated(q, rr, &psi, &gamma).unwrap(), "{q} {rr}");
                    assert_eq!(fast, pair_measure_oracle(q, rr, &psi, &gamma).unwrap(), "{q} {rr}");
                    assert!(overlap_bound_check(q, rr, &psi, &gamma).unwrap().all_ok());
                }
            }
        }
    }

    #[test]
    fn enclosed_bounds_contain_truth() {
        let psi = PsiSpec::recip();
        let sq2 = Quad::named("sqrt2-1").unwrap();
        let (lo, hi) = sq2.enclose(30);
        let truth = TargetSeq::Constant(sq2);
        for (q, rr) in [(10, 7), (12, 8), (30, 1), (64, 48)] {
            let t = pair_measure(q, rr, &psi, &truth).unwrap();
            let (a, b) = pair_measure_enclosed(q, rr, &psi, (&lo, &hi), (&lo, &hi)).unwrap();
            assert!(Quad::from(a) <= t && t <= Quad::from(b));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn random_rational_scenarios(q in 2u64..120, rr in 1u64..120, n1 in 0i64..1000, n2 in 0i64..1000,
                                     pn in 0i64..60, pd in 1i64..60, sn in 0i64..60, sd in 1i64..60) {
            prop_assume!(rr < q);
            let gamma = TargetSeq::FiniteSet { values: vec![rq(n1, 997), rq(n2, 991)], assign: crate::scenarios::Assignment::Residue };
            let psi = PsiSpec::table((1..=120).map(|i| if i == q as usize { r(pn, pd) } else { r(sn, sd) }).collect());
            let fast = pair_measure(q, rr, &psi, &gamma).unwrap();
            prop_assert_eq!(&fast, &pair_measure_oracle(q, rr, &psi, &gamma).unwrap());
            prop_assert_eq!(&fast, &pair_measure_enumerated(q, rr, &psi, &gamma).unwrap());
            prop_assert!(overlap_bound_check(q, rr, &psi, &gamma).unwrap().all_ok());
        }

        #[test]
        fn count_n_matches_brute(q in 1u64..40, rr in 1u64..40, dn in 1i64..80, n1 in -50i64..50, n2 in -50i64..50) {
            let d = r(dn, 100);
            let (a, b) = (rq(n1, 17), rq(n2, 13));
            let n = count_n(q, rr, &d, &a, &b);
            prop_assert_eq!(n, count_n_brute(q, rr, &d, &a, &b));
            let g = gcd_u64(q, rr);
            let bound = (Rational::from(2) * &d * Rational::from(q * rr) / Rational::from(g) + Rational::from(1)) * Rational::from(g);
            prop_assert!(Rational::from(n) <= bound);
        }

        #[test]
        fn period_invariance(q in 2u64..60, rr in 1u64..60, n in 0i64..100) {
            prop_assume!(rr < q);
            let psi = PsiSpec::recip();
            let a = TargetSeq::constant(r(n, 101));
            let b = TargetSeq::constant(r(n, 101) + Rational::from(1));
            prop_assert_eq!(pair_measure(q, rr, &psi, &a).unwrap(), pair_measure(q, rr, &psi, &b).unwrap());
        }
    }
}
