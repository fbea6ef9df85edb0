//! Multiplicative-function tables and divisor statistics.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::numeric::{ExactSum, HpReal, Rational, DEFAULT_BITS};

/// Above this bound the divisor-count scans switch to a segmented sieve.
pub const LINEAR_SIEVE_LIMIT: u64 = 10_000_000;

/// `phi`, `d`, `mobius` and smallest prime factor for `1..=limit`.
/// Index 0 is unused and holds 0.
#[derive(Clone, Debug)]
pub struct SieveTables {
    limit: usize,
    pub phi: Vec<u32>,
    pub d: Vec<u32>,
    pub mobius: Vec<i8>,
    pub spf: Vec<u32>,
    primes: Vec<u32>,
}

impl SieveTables {
    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Prime factorization from the spf table, as `(p, e)` pairs.
    pub fn factor(&self, mut n: usize) -> Vec<(u64, u32)> {
        assert!(n >= 1 && n <= self.limit);
        let mut out = Vec::new();
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        out
    }
}

/// Linear sieve up to `n`; `n = 0` gives empty tables.
pub fn sieve(n: usize) -> SieveTables {
    let len = n + 1;
    let mut phi = vec![0u32; len];
    let mut d = vec![0u32; len];
    let mut mobius = vec![0i8; len];
    let mut spf = vec![0u32; len];
    let mut exp = vec![0u8; len];
    let mut primes = Vec::new();
    if n >= 1 {
        phi[1] = 1;
        d[1] = 1;
        mobius[1] = 1;
        spf[1] = 1;
    }
    for i in 2..len {
        if spf[i] == 0 {
            spf[i] = i as u32;
            phi[i] = i as u32 - 1;
            d[i] = 2;
            mobius[i] = -1;
            exp[i] = 1;
            primes.push(i as u32);
        }
        for &p in &primes {
            let p = p as usize;
            let ip = i * p;
            if ip >= len || p > spf[i] as usize {
                break;
            }
            spf[ip] = p as u32;
            if p == spf[i] as usize {
                phi[ip] = phi[i] * p as u32;
                exp[ip] = exp[i] + 1;
                d[ip] = d[i] / (exp[i] as u32 + 1) * (exp[ip] as u32 + 1);
                mobius[ip] = 0;
                break;
            }
            phi[ip] = phi[i] * (p as u32 - 1);
            exp[ip] = 1;
            d[ip] = d[i] * 2;
            mobius[ip] = -mobius[i];
        }
    }
    SieveTables { limit: n, phi, d, mobius, spf, primes }
}

/// Trial-division factorization.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Sorted divisors of `n`.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn divisor_count(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Distinct prime divisors.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

/// `σ_τ(n) = Σ_{d|n} d^τ`, outward rounded.
pub fn sigma_tau(n: u64, tau: &Rational) -> HpReal {
    sigma_tau_bits(n, tau, DEFAULT_BITS)
}

pub fn sigma_tau_bits(n: u64, tau: &Rational, bits: u32) -> HpReal {
    assert!(n >= 1);
    if tau.is_integer() {
        let t: i32 = tau.floor_i64().and_then(|t| i32::try_from(t).ok()).expect("exponent too large");
        let s: Rational = divisors(n).into_iter().map(|d| Rational::from(d).pow(t)).sum();
        return HpReal::from_rational(&s, bits);
    }
    divisors(n).into_iter().fold(HpReal::from_int(0, bits), |acc, d| {
        acc.add(&HpReal::from_int(d as i64, bits).pow_rational(tau))
    })
}

/// `η(q) = Σ_{d|q} φ(d)/d`.
pub fn eta_gcdsum(q: u64) -> Rational {
    assert!(q >= 1);
    let mut s = ExactSum::new();
    for d in divisors(q) {
        s.add(&Rational::new(euler_phi(d), d));
    }
    s.value()
}

/// `η(q)` together with the check `η(q) ≤ d(q)`.
pub fn eta_check(q: u64) -> (Rational, u64, bool) {
    let eta = eta_gcdsum(q);
    let d = divisor_count(q);
    let ok = eta <= Rational::from(d);
    (eta, d, ok)
}

/// Calls `f(start, counts)` for consecutive blocks of `d(n)`, `1 ≤ n ≤ x`.
pub fn divisor_count_segments(x: u64, seg: usize, mut f: impl FnMut(u64, &[u32])) {
    if x == 0 {
        return;
    }
    let root = (x as f64).sqrt() as u64 + 2;
    let small = sieve(root as usize);
    let primes = small.primes();
    let mut rem = vec![0u64; seg];
    let mut cnt = vec![0u32; seg];
    let mut lo = 1u64;
    while lo <= x {
        let hi = (lo + seg as u64 - 1).min(x);
        let len = (hi - lo + 1) as usize;
        for i in 0..len {
            rem[i] = lo + i as u64;
            cnt[i] = 1;
        }
        for &p in primes {
            let p = p as u64;
            if p * p > hi {
                break;
            }
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                let i = (m - lo) as usize;
                let mut e = 0;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    e += 1;
                }
                cnt[i] *= e + 1;
                m += p;
            }
        }
        for i in 0..len {
            if rem[i] > 1 {
                cnt[i] *= 2;
            }
        }
        f(lo, &cnt[..len]);
        lo = hi + 1;
    }
}

/// `hist[k] = #{n ≤ x : d(n) = k}`.
pub fn divisor_histogram(x: u64) -> Vec<u64> {
    let mut hist = vec![0u64; 2];
    let mut bump = |d: u32| {
        let d = d as usize;
        if d >= hist.len() {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
    };
    if x <= LINEAR_SIEVE_LIMIT {
        let t = sieve(x as usize);
        t.d[1..].iter().for_each(|&d| bump(d));
    } else {
        divisor_count_segments(x, 1 << 20, |_, ds| ds.iter().for_each(|&d| bump(d)));
    }
    hist
}

/// `log x = max(1, ln x)` as an enclosure.
pub fn log_clamped(x: &Rational) -> HpReal {
    HpReal::from_rational(x, DEFAULT_BITS).log_clamped()
}

/// Largest integer `t` with `t ≤ 2^{log log x}`, certified.
pub fn kac_threshold(x: u64) -> Result<u64> {
    let mut bits = DEFAULT_BITS;
    while bits <= 1024 {
        let ll = HpReal::from_int(x as i64, bits).log_clamped().log_clamped();
        if ll.width().is_zero() && ll.lo().is_integer() {
            // The clamp pinned log log x to an integer, so 2^L is exact.
            let l = ll.lo().floor_i64().unwrap_or(64);
            return if l < 64 { Ok(1u64 << l) } else { Err(Error::Invalid("threshold overflow".into())) };
        }
        let ln2 = HpReal::from_int(2, bits).ln();
        let t = ll.mul(&ln2).exp();
        let (lo, hi) = (t.lo().floor(), t.hi().floor());
        if lo == hi {
            return u64::try_from(lo).map_err(|_| Error::Invalid("threshold overflow".into()));
        }
        bits *= 2;
    }
    Err(Error::Precision(format!("threshold 2^(loglog {x}) sits on an integer")))
}

/// Kac fraction from a precomputed histogram.
pub fn kac_fraction_from(x: u64, hist: &[u64]) -> Result<Rational> {
    let t = kac_threshold(x)? as usize;
    let count: u64 = hist.iter().take(t + 1).sum();
    Ok(Rational::new(count, x))
}

/// `(1/x)·#{n ≤ x : log₂ d(n) ≤ log log x}`.
pub fn kac_fraction(x: u64) -> Result<Rational> {
    if x < 3 {
        return Err(Error::Invalid("kac_fraction needs x ≥ 3".into()));
    }
    kac_fraction_from(x, &divisor_histogram(x))
}

/// `Σ_{n≤x} 1/d(n)`, exactly.
pub fn recip_divisor_sum_from(hist: &[u64]) -> Rational {
    let mut s = ExactSum::new();
    for (k, &c) in hist.iter().enumerate().skip(1) {
        if c > 0 {
            s.add_parts(&BigInt::from(c), &BigInt::from(k));
        }
    }
    s.value()
}

pub fn recip_divisor_ratio_from(x: u64, hist: &[u64]) -> HpReal {
    let s = recip_divisor_sum_from(hist);
    let root = log_clamped(&Rational::from(x)).sqrt();
    HpReal::from_rational(&(s / Rational::from(x)), DEFAULT_BITS).mul(&root)
}

/// `R(x) = (Σ_{n≤x} 1/d(n))·√(log x)/x`.
pub fn recip_divisor_ratio(x: u64) -> Result<HpReal> {
    if x < 3 {
        return Err(Error::Invalid("recip_divisor_ratio needs x ≥ 3".into()));
    }
    Ok(recip_divisor_ratio_from(x, &divisor_histogram(x)))
}

/// `Σ_{n≤N} φ(n)/n`, exactly.
pub fn phi_ratio_sum(t: &SieveTables, n: usize) -> Rational {
    assert!(n <= t.limit());
    let mut s = ExactSum::new();
    for k in 1..=n {
        let g = gcd(t.phi[k] as u64, k as u64);
        s.add_parts(&BigInt::from(t.phi[k] as u64 / g), &BigInt::from(k as u64 / g));
    }
    s.value()
}

/// Bounds `[lo, hi]` on `Σ_{n≤N} φ(n)/n`, each term rounded outward to
/// 64 fractional bits. The exact sum has a primorial-sized denominator, so
/// this is the one to use for large `N`.
pub fn phi_ratio_bounds(t: &SieveTables, n: usize) -> (Rational, Rational) {
    assert!(n <= t.limit());
    let (mut lo, mut inexact) = (0u128, 0u128);
    for k in 1..=n {
        let num = (t.phi[k] as u128) << 64;
        lo += num / k as u128;
        inexact += (num % k as u128 != 0) as u128;
    }
    let scale = |x: u128| Rational::new(BigInt::from(x), BigInt::from(1u128 << 64));
    (scale(lo), scale(lo + inexact))
}

fn gcd(a: u64, b: u64) -> u64 {
    crate::numeric::gcd_u64(a, b)
}

/// Outcome of comparing `Σ f·g` and `Σ f·h` by partial summation.
#[derive(Clone, Debug)]
pub struct PartialSummation {
    /// Smallest `c` with `G(n)/H(n) ∈ [1/c, c]` for all tested `n`.
    pub hypothesis_factor: Rational,
    /// Largest observed `max(F_g/F_h, F_h/F_g)` over prefixes.
    pub conclusion_factor: Rational,
    pub holds: bool,
}

/// Checks that weighting by a nonincreasing nonnegative `f` preserves the
/// prefix-sum comparison between `g` and `h`.
pub fn partial_summation_check(f: &[Rational], g: &[Rational], h: &[Rational]) -> Result<PartialSummation> {
    if f.len() != g.len() || g.len() != h.len() || f.is_empty() {
        return Err(Error::Invalid("sequences must be nonempty with equal length".into()));
    }
    if f.iter().any(|x| x.is_negative()) || f.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Hypothesis("weight f must be nonnegative and nonincreasing".into()));
    }
    let ratio = |a: &Rational, b: &Rational| -> Result<Rational> {
        if !a.is_positive() || !b.is_positive() {
            return Err(Error::Hypothesis("prefix sums must be positive".into()));
        }
        let r = a / b;
        Ok(if r < Rational::one() { r.recip() } else { r })
    };
    let (mut gs, mut hs, mut fg, mut fh) = (Rational::zero(), Rational::zero(), Rational::zero(), Rational::zero());
    let mut hyp = Rational::one();
    let mut concl = Rational::one();
    for i in 0..f.len() {
        gs += &g[i];
        hs += &h[i];
        fg += &f[i] * &g[i];
        fh += &f[i] * &h[i];
        hyp = hyp.max(ratio(&gs, &hs)?);
        if fg.is_positive() || fh.is_positive() {
            concl = concl.max(ratio(&fg, &fh)?);
        }
    }
    let holds = concl <= hyp;
    Ok(PartialSummation { hypothesis_factor: hyp, conclusion_factor: concl, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sieve_examples() {
        let t = sieve(12);
        assert_eq!((t.d[12], t.phi[12], t.mobius[12]), (6, 4, 0));
        assert_eq!((t.phi[7], t.d[7], t.mobius[7]), (6, 2, -1));
        let t = sieve(1);
        assert_eq!((t.phi[1], t.d[1], t.mobius[1]), (1, 1, 1));
        assert_eq!(sieve(0).limit(), 0);
    }

    #[test]
    fn sieve_agrees_with_factorization() {
        let t = sieve(5000);
        for n in 1..=5000u64 {
            let f = factorize(n);
            assert_eq!(t.phi[n as usize] as u64, euler_phi(n));
            assert_eq!(t.d[n as usize] as u64, divisor_count(n));
            let mu = if f.iter().any(|&(_, e)| e > 1) { 0 } else if f.len() % 2 == 0 { 1 } else { -1 };
            assert_eq!(t.mobius[n as usize], mu);
            assert_eq!(t.factor(n as usize), f);
        }
        for &p in t.primes() {
            let p = p as usize;
            assert_eq!((t.phi[p] as usize, t.d[p], t.mobius[p]), (p - 1, 2, -1));
        }
    }

    #[test]
    fn mobius_inversion_of_phi() {
        let t = sieve(3000);
        for q in 1..=3000u64 {
            let s: i64 = divisors(q).iter().map(|&d| t.mobius[d as usize] as i64 * (q / d) as i64).sum();
            assert_eq!(s, t.phi[q as usize] as i64);
        }
    }

    #[test]
    fn segmented_matches_linear() {
        let t = sieve(20_000);
        let mut seen = 0;
        divisor_count_segments(20_000, 777, |lo, ds| {
            for (i, &d) in ds.iter().enumerate() {
                assert_eq!(d, t.d[lo as usize + i]);
                seen += 1;
            }
        });
        assert_eq!(seen, 20_000);
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_tau(6, &Rational::from(-1));
        assert!(s.contains(&Rational::from(2)) && s.width().is_zero());
        assert!(sigma_tau(6, &Rational::one()).contains(&Rational::from(12)));
        assert!(sigma_tau(360, &Rational::zero()).contains(&Rational::from(divisor_count(360))));
        let s = sigma_tau(16, &Rational::new(-1, 4));
        let f: f64 = [1f64, 2., 4., 8., 16.].iter().map(|d| d.powf(-0.25)).sum();
        assert!((s.mid_f64() - f).abs() < 1e-12);
        assert!(s.width() < Rational::pow2_neg(64));
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_gcdsum(1), Rational::one());
        assert_eq!(eta_gcdsum(6), Rational::new(5, 2));
        assert_eq!(eta_gcdsum(12), Rational::new(10, 3));
        assert!(eta_check(12).2);
        // Gcd-sum form.
        for q in 1..200u64 {
            let s: Rational = (1..=q).map(|r| Rational::new(gcd(q, r), q)).sum();
            assert_eq!(s, eta_gcdsum(q));
        }
    }

    #[test]
    fn kac_examples() {
        assert_eq!(kac_threshold(100).unwrap(), 2);
        assert_eq!(kac_fraction(100).unwrap(), Rational::new(26, 100));
        // Clamping keeps the threshold at 2 or more.
        assert!(kac_threshold(3).unwrap() >= 2);
    }

    #[test]
    fn recip_divisor_small() {
        let hist = divisor_histogram(10);
        assert_eq!(recip_divisor_sum_from(&hist), Rational::new(53, 12));
        let r = recip_divisor_ratio(10).unwrap();
        let f = 53.0 / 12.0 * 10f64.ln().sqrt() / 10.0;
        assert!((r.mid_f64() - f).abs() < 1e-14);
        assert!(r.lo().is_positive());
    }

    #[test]
    fn phi_mean_band() {
        let t = sieve(1000);
        let m = phi_ratio_sum(&t, 1000) / Rational::from(1000);
        assert!(m >= Rational::new(1, 2) && m <= Rational::new(7, 10));
        let (lo, hi) = phi_ratio_bounds(&t, 1000);
        let exact = phi_ratio_sum(&t, 1000);
        assert!(lo <= exact && exact <= hi);
        assert!(&hi - &lo <= Rational::new(1000, 1) * Rational::pow2_neg(64));
    }

    #[test]
    fn partial_summation_phi() {
        let n = 2000;
        let t = sieve(n);
        let f: Vec<_> = (1..=n as u64).map(|k| Rational::new(1, k)).collect();
        let g: Vec<_> = (1..=n).map(|k| Rational::new(t.phi[k] as u64, k as u64)).collect();
        let h = vec![Rational::new(3, 5); n];
        let rep = partial_summation_check(&f, &g, &h).unwrap();
        assert!(rep.holds, "{rep:?}");
        let bad = vec![Rational::from(1), Rational::from(2)];
        assert!(partial_summation_check(&bad, &bad, &bad).is_err());
    }

    proptest! {
        #[test]
        fn eta_at_most_d(q in 1u64..1_000_000) {
            prop_assert!(eta_check(q).2);
        }

        #[test]
        fn partial_summation_bound_holds(
            f in prop::collection::vec(0u32..20, 1..30),
            g in prop::collection::vec(1u32..20, 30),
            h in prop::collection::vec(1u32..20, 30),
        ) {
            let mut f = f;
            f.sort_unstable_by(|a, b| b.cmp(a));
            let n = f.len();
            let fr: Vec<_> = f.iter().map(|&x| Rational::from(x)).collect();
            let gr: Vec<_> = g[..n].iter().map(|&x| Rational::from(x)).collect();
            let hr: Vec<_> = h[..n].iter().map(|&x| Rational::from(x)).collect();
            if fr[0].is_positive() {
                let rep = partial_summation_check(&fr, &gr, &hr).unwrap();
                prop_assert!(rep.holds);
            }
        }
    }
}
