//! Limsup-set machinery: Borel–Cantelli and Chung–Erdős ratios, the dyadic
//! classes of the gcd-sum reduction, extra-divergence weights, hit counting,
//! and the local uniformity checks.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::arithfn::eta_gcdsum;
use crate::error::{Error, Result};
use crate::exactsets::CircleIntervalSet;
use crate::numeric::{gcd_u64, ExactSum, FixedSum, HpReal, Quad, Rational, RealEnclosure, Scalar, DEFAULT_BITS, MAX_REFINE_BITS};
use crate::overlaps::{pair_measure_exact, sq_bits};
use crate::par::Exec;
use crate::scenarios::{PsiSpec, TargetSeq};
use crate::schmidt::GammaValue;
use crate::stream::{dyadic_at, stream, DYADIC_BITS};

fn qr(r: Rational) -> Quad {
    Quad::from(r)
}

fn qi(n: impl Into<BigInt>) -> Quad {
    Quad::from(Rational::from_integer(n))
}

/// Measures `μ(A_q)` for `q ≤ Q` and the pair sums `Σ_{q,r ≤ Q′} μ(A_q ∩ A_r)`
/// on a grid of cut-offs.
#[derive(Clone, Debug)]
pub struct OverlapMatrix {
    pub q_max: u64,
    /// `mu[q - 1] = μ(A_q)`.
    pub mu: Vec<Quad>,
    /// Sorted cut-offs; always ends with `q_max`.
    pub grid: Vec<u64>,
    pub pair_sums: Vec<Quad>,
}

impl OverlapMatrix {
    /// Builds the matrix from a measure and a symmetric pair function.
    /// The diagonal is taken from `mu`.
    pub fn from_fn<M, P>(q_max: u64, grid: &[u64], mu: M, pair: P, exec: Exec) -> Result<Self>
    where
        M: Fn(u64) -> Quad + Sync + Send,
        P: Fn(u64, u64) -> Quad + Sync + Send,
    {
        if q_max == 0 {
            return Err(Error::Invalid("empty index range".into()));
        }
        let mut grid: Vec<u64> = grid.to_vec();
        if let Some(&bad) = grid.iter().find(|&&g| g == 0 || g > q_max) {
            return Err(Error::Invalid(format!("grid point {bad} outside 1..={q_max}")));
        }
        grid.push(q_max);
        grid.sort_unstable();
        grid.dedup();
        let mus: Vec<Quad> = exec.map_range(1, q_max + 1, &mu);
        let rows: Vec<Quad> = exec.map_range(1, q_max + 1, |q| {
            let mut off = Quad::zero();
            for r in 1..q {
                off = &off + &pair(q, r);
            }
            &mus[q as usize - 1] + &off.scale(&Rational::from(2))
        });
        let mut pair_sums = Vec::with_capacity(grid.len());
        let mut acc = Quad::zero();
        let mut next = 0;
        for (i, row) in rows.iter().enumerate() {
            acc = &acc + row;
            if grid[next] == i as u64 + 1 {
                pair_sums.push(acc.clone());
                next += 1;
            }
        }
        Ok(OverlapMatrix { q_max, mu: mus, grid, pair_sums })
    }

    /// `A_q = {α : ‖qα − γ_q‖ < min(ψ(q), 1/2)}` with the closed-form overlaps.
    pub fn from_targets(q_max: u64, grid: &[u64], psi: &PsiSpec, gamma: &TargetSeq, exec: Exec) -> Result<Self> {
        let radius: Vec<Rational> = (1..=q_max).map(|q| psi.set_radius(q)).collect::<Result<_>>()?;
        let gam: Vec<Quad> = (1..=q_max).map(|q| gamma.gamma(q)).collect();
        let mu = |q: u64| qr(&radius[q as usize - 1] * &Rational::from(2));
        let pair = |q: u64, r: u64| {
            let (i, j) = (q as usize - 1, r as usize - 1);
            pair_measure_exact(q, r, &radius[i], &radius[j], &gam[i], &gam[j])
        };
        Self::from_fn(q_max, grid, mu, pair, exec)
    }

    /// The sets `sets[0], sets[1], …` indexed from 1, overlaps by intersection.
    pub fn from_sets<S>(sets: &[CircleIntervalSet<S>], grid: &[u64]) -> Result<Self>
    where
        S: Scalar + Into<Quad>,
    {
        let n = sets.len() as u64;
        let mu = |q: u64| sets[q as usize - 1].measure().clone().into();
        let pair = |q: u64, r: u64| sets[q as usize - 1].intersect(&sets[r as usize - 1]).measure().clone().into();
        Self::from_fn(n, grid, mu, pair, Exec::Sequential)
    }

    pub fn measure_sum(&self, q_prime: u64) -> Quad {
        self.mu[..q_prime as usize].iter().fold(Quad::zero(), |a, m| &a + m)
    }

    pub fn pair_sum(&self, q_prime: u64) -> Option<&Quad> {
        self.grid.binary_search(&q_prime).ok().map(|i| &self.pair_sums[i])
    }
}

/// `(Σ_{q ≤ Q′} μ(A_q))² / Σ_{q,r ≤ Q′} μ(A_q ∩ A_r)` at a grid cut-off.
pub fn bc_lower_bound(m: &OverlapMatrix, q_prime: u64) -> Result<Quad> {
    let pairs = m
        .pair_sum(q_prime)
        .ok_or_else(|| Error::Invalid(format!("Q′ = {q_prime} is not on the grid")))?;
    let s = m.measure_sum(q_prime);
    if s.is_zero() {
        return Err(Error::Invalid(format!("Σ μ(A_q) vanishes up to {q_prime}")));
    }
    if pairs.signum() <= 0 {
        return Err(Error::Corrupt(format!("pair sum {pairs} with Σ μ = {s}")));
    }
    Ok(&(&s * &s) * &pairs.recip())
}

/// `(Σ μ(A_q))² / Σ μ(A_q ∩ A_r)` over every index of the matrix.
pub fn chung_erdos_bound(m: &OverlapMatrix) -> Result<Quad> {
    bc_lower_bound(m, m.q_max)
}

/// The union bound for a finite family of interval sets.
pub fn chung_erdos_from<S: Scalar + Into<Quad>>(sets: &[CircleIntervalSet<S>]) -> Result<Quad> {
    if sets.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    chung_erdos_bound(&OverlapMatrix::from_sets(sets, &[])?)
}

pub fn union_measure<S: Scalar>(sets: &[CircleIntervalSet<S>]) -> S {
    sets.iter()
        .fold(CircleIntervalSet::empty(), |acc: CircleIntervalSet<S>, s| acc.union(s))
        .measure()
        .clone()
}

/// `η(q, r) = gcd(q, r)/q`.
pub fn eta_pair(q: u64, r: u64) -> Rational {
    Rational::new(gcd_u64(q, r), q)
}

/// `Σ_{r ≤ q} η(q, r)`, summed directly.
pub fn eta_pair_sum(q: u64) -> Rational {
    let s: u64 = (1..=q).map(|r| gcd_u64(q, r)).sum();
    Rational::new(s, q)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct YuDecomposition {
    /// `ℓ ↦ D_ℓ`, members in input order.
    pub classes: BTreeMap<u32, Vec<u64>>,
    /// `ℓ ↦ Σ_{q ∈ D_ℓ} weight(q)`.
    pub sigma: BTreeMap<u32, Rational>,
}

impl YuDecomposition {
    pub fn class_of(&self, q: u64) -> Option<u32> {
        self.classes.iter().find(|(_, v)| v.contains(&q)).map(|(&l, _)| l)
    }

    pub fn len(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// `ℓ` with `2^ℓ ≤ η < 2^{ℓ+1}`.
pub fn dyadic_class(eta: &Rational) -> Result<u32> {
    if *eta < Rational::one() {
        return Err(Error::Invalid(format!("η = {eta} is below 1")));
    }
    Ok((eta.floor().bits() - 1) as u32)
}

/// Splits `qs` into the classes `D_ℓ` of `eta` and sums `weights` per class.
pub fn yu_classes(qs: &[u64], eta: &[Rational], weights: &[Rational]) -> Result<YuDecomposition> {
    if qs.len() != eta.len() || qs.len() != weights.len() {
        return Err(Error::Invalid("qs, η and weights differ in length".into()));
    }
    let mut classes: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    let mut sums: BTreeMap<u32, ExactSum> = BTreeMap::new();
    for ((&q, e), w) in qs.iter().zip(eta).zip(weights) {
        if w.is_negative() {
            return Err(Error::Invalid(format!("weight at q = {q} is negative")));
        }
        let l = dyadic_class(e).map_err(|_| Error::Invalid(format!("η({q}) = {e} is below 1")))?;
        classes.entry(l).or_default().push(q);
        sums.entry(l).or_default().add(w);
    }
    let sigma = sums.into_iter().map(|(l, s)| (l, s.value())).collect();
    Ok(YuDecomposition { classes, sigma })
}

/// Classes of `1..=q_max` under the gcd sum, with weights
/// `μ(A_q)/(η(q)·h(η(q)))` for `h(x) = x` and `μ(A_q) = 2·min(ψ(q), 1/2)`.
pub fn yu_default(q_max: u64, psi: &PsiSpec) -> Result<YuDecomposition> {
    let qs: Vec<u64> = (1..=q_max).collect();
    let eta: Vec<Rational> = qs.iter().map(|&q| eta_gcdsum(q)).collect();
    let weights = qs
        .iter()
        .zip(&eta)
        .map(|(&q, e)| Ok(psi.set_radius(q)? * Rational::from(2) * (e * e).recip()))
        .collect::<Result<Vec<_>>>()?;
    yu_classes(&qs, &eta, &weights)
}

/// `1/(√log q · Π_{j=2}^{k−1} log^{(j)} q · (log^{(k)} q)^{1+ε})` with
/// `log = max(1, ln)`.
pub fn extra_div_weight(q: u64, k: u32, eps: &Rational) -> Result<HpReal> {
    if q == 0 || k < 2 || !eps.is_positive() {
        return Err(Error::Invalid(format!("extra_div_weight needs q ≥ 1, k ≥ 2, ε > 0 (got {q}, {k}, {eps})")));
    }
    let bits = DEFAULT_BITS;
    let mut logs = Vec::with_capacity(k as usize);
    let mut x = HpReal::from_int(q as i64, bits);
    for _ in 0..k {
        x = x.log_clamped();
        logs.push(x.clone());
    }
    let mut den = logs[0].sqrt();
    for l in &logs[1..k as usize - 1] {
        den = den.mul(l);
    }
    let last = &logs[k as usize - 1];
    den = den.mul(&last.pow_rational(&(Rational::one() + eps)));
    Ok(den.recip())
}

/// Condensed partial sums `Σ_{k < K} 2^k·term(2^k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condensed {
    pub partials: Vec<Rational>,
    /// The last condensed term is at least the one halfway through, so the
    /// sums are still growing linearly on the tested range.
    pub looks_divergent: bool,
}

pub fn condensation_partial(term: impl Fn(u64) -> Rational, k_max: u32) -> Result<Condensed> {
    if k_max == 0 || k_max > 62 {
        return Err(Error::Invalid(format!("K = {k_max} outside 1..=62")));
    }
    // Monotonicity on 2^k, 2^k + 1, 3·2^{k-1}, ….
    let mut samples: Vec<u64> = vec![1];
    for k in 1..=k_max as u64 {
        let p = 1u64 << k;
        samples.extend([p - p / 4, p, p + 1]);
    }
    samples.sort_unstable();
    samples.dedup();
    let mut prev: Option<(u64, Rational)> = None;
    for &q in &samples {
        let v = term(q);
        if let Some((p, pv)) = &prev {
            if v > *pv {
                return Err(Error::Hypothesis(format!("term increases between {p} and {q}")));
            }
        }
        prev = Some((q, v));
    }
    let terms: Vec<Rational> = (0..k_max).map(|k| Rational::from(1u64 << k) * term(1u64 << k)).collect();
    let mut acc = Rational::zero();
    let partials = terms
        .iter()
        .map(|t| {
            acc = &acc + t;
            acc.clone()
        })
        .collect();
    let looks_divergent = terms.last() >= terms.get(terms.len() / 2);
    Ok(Condensed { partials, looks_divergent })
}

/// Result of a tested property of `h`.
#[derive(Clone, Debug)]
pub struct HAdmissibility {
    /// `Σ_{ℓ ≤ L} 1/h(2^ℓ)` for `L = 0, 1, …`.
    pub partials: Vec<HpReal>,
    pub last_increment: HpReal,
    pub flat: bool,
    /// `max h(2q)/h(q)` on the grid.
    pub max_doubling: HpReal,
    pub increasing: bool,
}

pub fn h_admissibility<H>(h: H, l_max: u32, grid: &[u64], tol: &Rational) -> Result<HAdmissibility>
where
    H: Fn(&Rational) -> HpReal,
{
    if l_max == 0 || grid.is_empty() {
        return Err(Error::Invalid("empty test range".into()));
    }
    let mut partials = Vec::with_capacity(l_max as usize + 1);
    let mut acc = HpReal::from_int(0, DEFAULT_BITS);
    let mut last = acc.clone();
    for l in 0..=l_max {
        let v = h(&Rational::from_integer(BigInt::from(1) << l as usize));
        if !v.certainly_gt_rational(&Rational::zero()) {
            return Err(Error::Hypothesis(format!("h(2^{l}) is not positive")));
        }
        last = v.recip();
        acc = acc.add(&last);
        partials.push(acc.clone());
    }
    let flat = last.certainly_le_rational(tol);
    let mut max_doubling = HpReal::from_int(0, DEFAULT_BITS);
    let mut increasing = true;
    for &q in grid {
        let a = h(&Rational::from(q));
        let b = h(&Rational::from(2 * q));
        if b.certainly_lt(&a) {
            increasing = false;
        }
        max_doubling = max_doubling.max(&b.div(&a));
    }
    Ok(HAdmissibility { partials, last_increment: last, flat, max_doubling, increasing })
}

/// `N(Q, α) = #{1 ≤ q ≤ Q : ‖qα − γ_q‖ < ψ(q)}`; `lo < hi` only when some
/// comparisons stayed undecided at the precision cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HitCount {
    pub lo: u64,
    pub hi: u64,
}

impl HitCount {
    pub fn exact(&self) -> Option<u64> {
        (self.lo == self.hi).then_some(self.lo)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Hit,
    Miss,
    Ambiguous,
}

/// Range of `‖x‖` over `x ∈ [lo, hi]`.
fn dist_range(lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    let half = Rational::new(1, 2);
    if hi - lo >= Rational::one() {
        return (Rational::zero(), half);
    }
    let n = Rational::from_integer(lo.floor());
    let (a, b) = (lo - &n, hi - &n);
    let d = |t: &Rational| t.clone().min(Rational::one() - t);
    let one = Rational::one();
    let span = |a: &Rational, b: &Rational| {
        let lo = d(a).min(d(b));
        let hi = if *a <= half && half <= *b { half.clone() } else { d(a).max(d(b)) };
        (lo, hi)
    };
    if b <= one {
        span(&a, &b)
    } else {
        let (_, h1) = span(&a, &one);
        let (_, h2) = span(&Rational::zero(), &(&b - &one));
        (Rational::zero(), h1.max(h2))
    }
}

fn decide(q: u64, psi: &PsiSpec, lo: &Rational, hi: &Rational) -> Result<Option<Verdict>> {
    if psi.lt(q, hi)? {
        return Ok(Some(Verdict::Hit));
    }
    if !psi.lt(q, lo)? {
        return Ok(Some(Verdict::Miss));
    }
    Ok(None)
}

/// Whether `‖qα − γ‖ < ψ(q)`; a tie is a miss.
pub fn hit_verdict(q: u64, alpha: &mut GammaValue, psi: &PsiSpec, gamma: &Quad) -> Result<Verdict> {
    match alpha {
        GammaValue::Enclosure(e) => loop {
            let bits = e.bits().max(64);
            let (glo, ghi) = gamma.enclose(bits);
            let qq = Rational::from(q);
            let xlo = e.lo() * &qq - &ghi;
            let xhi = e.hi() * &qq - &glo;
            let (dlo, dhi) = dist_range(&xlo, &xhi);
            if let Some(v) = decide(q, psi, &dlo, &dhi)? {
                return Ok(v);
            }
            if e.bits() >= MAX_REFINE_BITS {
                return Ok(Verdict::Ambiguous);
            }
            e.refine_bits((e.bits() * 2).clamp(64, MAX_REFINE_BITS))?;
        },
        _ => {
            let a = alpha.exact().expect("not an enclosure");
            let irr = |x: &Quad| !x.irrational_part().is_zero();
            if irr(&a) && irr(gamma) && a.radicand() != gamma.radicand() {
                return Err(Error::Invalid(format!("α = {a} and γ = {gamma} live in different quadratic fields")));
            }
            let x = &a.scale(&Rational::from(q)) - gamma;
            let f = &x - &qi(x.floor());
            let g = &qi(1) - &f;
            let d = if f <= g { f } else { g };
            if let Some(dr) = d.as_rational() {
                return Ok(if psi.lt(q, dr)? { Verdict::Hit } else { Verdict::Miss });
            }
            if let Some(v) = psi.value(q) {
                return Ok(if d < qr(v) { Verdict::Hit } else { Verdict::Miss });
            }
            let mut bits = 64;
            loop {
                let (lo, hi) = d.enclose(bits);
                if let Some(v) = decide(q, psi, &lo, &hi)? {
                    return Ok(v);
                }
                if bits >= MAX_REFINE_BITS {
                    return Ok(Verdict::Ambiguous);
                }
                bits *= 2;
            }
        }
    }
}

const DYADIC_ONE: u64 = 1 << DYADIC_BITS;
/// Every `‖x‖` on the `2^-32` lattice is at most `2^31`, so this threshold
/// means "always a hit".
const THRESHOLD_CAP: u64 = (DYADIC_ONE >> 1) + 1;

/// Smallest `t ≥ 0` with `t/2^32 ≥ ψ(q)`, capped at [`THRESHOLD_CAP`]: a
/// lattice distance `D` hits exactly when `D < t`.
pub fn lattice_threshold(psi: &PsiSpec, q: u64) -> Result<u64> {
    let at = |t: u64| Rational::new(t, DYADIC_ONE);
    let est = (psi.approx(q) * DYADIC_ONE as f64).ceil();
    let mut t = if est.is_finite() { (est.max(0.0) as u64).min(THRESHOLD_CAP) } else { THRESHOLD_CAP };
    while t > 0 && !psi.lt(q, &at(t - 1))? {
        t -= 1;
    }
    while t < THRESHOLD_CAP && psi.lt(q, &at(t))? {
        t += 1;
    }
    Ok(t)
}

/// `γ_q·2^32` for `q = 1..=q_max` when every target sits on the lattice.
fn lattice_targets(gamma: &TargetSeq, q_max: u64) -> Option<Vec<u32>> {
    match gamma {
        TargetSeq::Random { seed, stream: name } => {
            use rand::RngCore;
            let mut rng = stream(*seed, name);
            rng.set_word_pos(1);
            Some((1..=q_max).map(|_| rng.next_u32()).collect())
        }
        _ => {
            let mut out = Vec::with_capacity(q_max as usize);
            for q in 1..=q_max {
                out.push(lattice_word(gamma.gamma(q).as_rational()?)?);
            }
            Some(out)
        }
    }
}

/// `frac(x)·2^32` when `x` is a multiple of `2^-32`.
fn lattice_word(x: &Rational) -> Option<u32> {
    if x.dyadic_exponent()? > DYADIC_BITS {
        return None;
    }
    let w = (x.fract() * Rational::from(DYADIC_ONE)).floor();
    w.to_u32()
}

fn lattice_dist(q: u64, a: u32, g: u32) -> u64 {
    let x = (q as u32).wrapping_mul(a).wrapping_sub(g) as u64;
    x.min(DYADIC_ONE - x)
}

/// Hit counts at each cut-off of `grid` for a lattice `α = a/2^32`.
fn lattice_counts(a: u32, targets: &[u32], thresholds: &[u64], grid: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut n = 0u64;
    let mut next = 0;
    for (i, (&g, &t)) in targets.iter().zip(thresholds).enumerate() {
        let q = i as u64 + 1;
        if lattice_dist(q, a, g) < t {
            n += 1;
        }
        while next < grid.len() && grid[next] == q {
            out.push(n);
            next += 1;
        }
    }
    out
}

pub fn count_hits(alpha: &mut GammaValue, psi: &PsiSpec, gamma: &TargetSeq, q_max: u64) -> Result<HitCount> {
    if q_max == 0 {
        return Err(Error::Invalid("Q must be positive".into()));
    }
    if let GammaValue::Rational(r) = alpha {
        if let (Some(a), Some(targets)) = (lattice_word(r), lattice_targets(gamma, q_max)) {
            let th: Vec<u64> = (1..=q_max).map(|q| lattice_threshold(psi, q)).collect::<Result<_>>()?;
            let n = lattice_counts(a, &targets, &th, &[q_max])[0];
            return Ok(HitCount { lo: n, hi: n });
        }
    }
    count_hits_generic(alpha, psi, gamma, q_max)
}

/// The same count decided one `q` at a time.
pub fn count_hits_generic(alpha: &mut GammaValue, psi: &PsiSpec, gamma: &TargetSeq, q_max: u64) -> Result<HitCount> {
    let (mut lo, mut hi) = (0, 0);
    for q in 1..=q_max {
        match hit_verdict(q, alpha, psi, &gamma.gamma(q))? {
            Verdict::Hit => {
                lo += 1;
                hi += 1;
            }
            Verdict::Ambiguous => hi += 1,
            Verdict::Miss => {}
        }
    }
    Ok(HitCount { lo, hi })
}

/// `N(Q, α)` for the `i`-th sampled `α` at one cut-off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitRow {
    pub seed: u64,
    pub alpha_id: u64,
    pub alpha: Rational,
    pub q: u64,
    pub n: u64,
    /// `Φ(Q) = Σ_{q ≤ Q} 2ψ(q)` lies in `[phi_lo, phi_hi]`.
    pub phi_lo: Rational,
    pub phi_hi: Rational,
}

impl HitRow {
    pub fn phi_mid(&self) -> Rational {
        (&self.phi_lo + &self.phi_hi) * Rational::new(1, 2)
    }

    /// `N/Φ` at the midpoint of the `Φ` enclosure.
    pub fn ratio(&self) -> Rational {
        Rational::from(self.n) * self.phi_mid().recip()
    }
}

/// Hit counts for `n_alpha` lattice points `α_i` drawn from the `alpha`
/// stream, against targets drawn from the `gamma` stream of the same seed.
pub fn sprindzuk_experiment(seed: u64, n_alpha: u64, psi: &PsiSpec, grid: &[u64], exec: Exec) -> Result<Vec<HitRow>> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let q_max = *grid.last().ok_or_else(|| Error::Invalid("empty Q grid".into()))?;
    if grid[0] == 0 {
        return Err(Error::Invalid("Q must be positive".into()));
    }
    let gamma = TargetSeq::random(seed);
    let targets = lattice_targets(&gamma, q_max).expect("random targets sit on the lattice");
    let th: Vec<u64> = exec.map_range(1, q_max + 1, |q| lattice_threshold(psi, q)).into_iter().collect::<Result<_>>()?;
    let phis = phi_prefix(psi, &th, &grid)?;
    let ids: Vec<u64> = (0..n_alpha).collect();
    let counts = exec.map(&ids, |&i| {
        let a = dyadic_at(seed, "alpha", i);
        let w = lattice_word(&a).expect("stream values sit on the lattice");
        (a, lattice_counts(w, &targets, &th, &grid))
    });
    let mut rows = Vec::with_capacity(grid.len() * n_alpha as usize);
    for (i, (a, ns)) in counts.into_iter().enumerate() {
        for ((&q, n), (lo, hi)) in grid.iter().zip(ns).zip(&phis) {
            rows.push(HitRow {
                seed,
                alpha_id: i as u64,
                alpha: a.clone(),
                q,
                n,
                phi_lo: lo.clone(),
                phi_hi: hi.clone(),
            });
        }
    }
    Ok(rows)
}

/// Enclosures of `Φ` at the grid points. Below the cap the lattice threshold
/// `t` brackets `ψ(q)` in `((t−1)/2^32, t/2^32]`.
fn phi_prefix(psi: &PsiSpec, th: &[u64], grid: &[u64]) -> Result<Vec<(Rational, Rational)>> {
    let scale = DYADIC_BITS;
    let mut sum = FixedSum::new(scale);
    let mut out = Vec::with_capacity(grid.len());
    let mut next = 0;
    for (i, &t) in th.iter().enumerate() {
        let q = i as u64 + 1;
        if let Some(v) = psi.value(q) {
            sum.add(&(v * Rational::from(2)));
        } else if t < THRESHOLD_CAP && t > 0 {
            sum.add_scaled(&BigInt::from(2 * (t - 1)), &BigInt::from(2 * t));
        } else {
            let e = psi.enclose(q, 64).mul_rational(&Rational::from(2));
            let lo = (e.lo() * Rational::from(1u64 << scale)).floor();
            let hi = (e.hi() * Rational::from(1u64 << scale)).ceil();
            sum.add_scaled(&lo, &hi);
        }
        while next < grid.len() && grid[next] == q {
            out.push((sum.lo(), sum.hi()));
            next += 1;
        }
    }
    Ok(out)
}

/// `∫_0^v 1[‖t‖ < ρ] dt` for `0 ≤ ρ ≤ 1/2`.
fn cumulative(v: &Quad, rho: &Rational) -> Quad {
    let n = (v + &qr(Rational::new(1, 2))).floor();
    let f = v - &qi(n.clone());
    let r = qr(rho.clone());
    let c = if f > r {
        r
    } else if f < -&r {
        -&r
    } else {
        f
    };
    &qr(Rational::from_integer(n) * rho * Rational::from(2)) + &c
}

/// `meas(A_q ∩ U)` for the full target set, by the cumulative formula.
pub fn aq_meet_measure(q: u64, rho: &Rational, gamma: &Quad, u: &CircleIntervalSet) -> Quad {
    let qq = Rational::from(q);
    let mut acc = Quad::zero();
    for (l, r) in u.pieces() {
        let hi = &qr(r * &qq) - gamma;
        let lo = &qr(l * &qq) - gamma;
        acc = &acc + &(&cumulative(&hi, rho) - &cumulative(&lo, rho));
    }
    acc.scale(&qq.recip())
}

/// Per-`q` uniformity ratios and the first `q₀` after which all reach 1/2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformityReport {
    pub q_lo: u64,
    pub q_hi: u64,
    /// `ratios[i]` is the ratio at `q_lo + i`.
    pub ratios: Vec<Quad>,
    pub q0: Option<u64>,
    pub min_ratio: Quad,
    pub min_at: u64,
}

/// `meas(A_q ∩ U)/(meas(A_q)·meas(U))` for `q_lo ≤ q ≤ q_hi`.
pub fn uniformity_check(
    u: &CircleIntervalSet,
    psi: &PsiSpec,
    gamma: &TargetSeq,
    q_lo: u64,
    q_hi: u64,
    exec: Exec,
) -> Result<UniformityReport> {
    if u.measure().is_zero() {
        return Err(Error::Invalid("U has measure zero".into()));
    }
    if q_lo == 0 || q_hi < q_lo {
        return Err(Error::Invalid(format!("bad q range {q_lo}..={q_hi}")));
    }
    let mu_u = u.measure().clone();
    let ratios: Vec<Quad> = exec
        .map_range(q_lo, q_hi + 1, |q| {
            let rho = psi.set_radius(q)?;
            if rho.is_zero() {
                return Err(Error::Invalid(format!("ψ({q}) = 0 leaves A_q empty")));
            }
            let meet = aq_meet_measure(q, &rho, &gamma.gamma(q), u);
            Ok(meet.scale(&(&rho * &Rational::from(2) * &mu_u).recip()))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let half = qr(Rational::new(1, 2));
    let q0 = first_tail(q_lo, &ratios, |r| *r >= half);
    let (i, min) = ratios.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).expect("non-empty range");
    Ok(UniformityReport { q_lo, q_hi, min_ratio: min.clone(), min_at: q_lo + i as u64, ratios, q0 })
}

/// Smallest `q₀` such that `ok` holds from `q₀` to the end.
fn first_tail<T>(q_lo: u64, xs: &[T], ok: impl Fn(&T) -> bool) -> Option<u64> {
    let bad = xs.iter().rposition(|x| !ok(x));
    match bad {
        None => Some(q_lo),
        Some(i) if i + 1 < xs.len() => Some(q_lo + i as u64 + 1),
        Some(_) => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BhvReport {
    pub ball: usize,
    pub measure: Rational,
    pub q0: Option<u64>,
    pub violations: usize,
    /// Largest `meas(B ∩ A′_q)/(meas(B)·meas(A′_q))` and where it occurs.
    pub max_ratio: Quad,
    pub max_at: u64,
}

/// Residue counts of `S(q)` on integer ranges.
struct ResidueCounter {
    q: i128,
    prefix: Vec<u32>,
}

impl ResidueCounter {
    fn new(q: u64, mask: &crate::overlaps::Bitset) -> Self {
        let mut prefix = Vec::with_capacity(q as usize + 1);
        let mut c = 0u32;
        prefix.push(0);
        for a in 0..q as usize {
            c += mask.get(a) as u32;
            prefix.push(c);
        }
        ResidueCounter { q: q as i128, prefix }
    }

    /// `#{a < x : a mod q ∈ S}` relative to 0.
    fn below(&self, x: i128) -> i128 {
        let (d, m) = x.div_mod_floor(&self.q);
        d * *self.prefix.last().unwrap() as i128 + self.prefix[m as usize] as i128
    }

    fn contains(&self, a: i128) -> bool {
        let m = a.mod_floor(&self.q) as usize;
        self.prefix[m + 1] > self.prefix[m]
    }
}

fn floor_i128(x: &Quad) -> i128 {
    x.floor().to_i128().expect("floor fits")
}

/// `meas(A′_q ∩ (l, r))·q` in the scaled variable `t = qα − γ`.
fn restricted_meet(c: &ResidueCounter, t1: &Quad, t2: &Quad, rho: &Rational) -> Quad {
    let rq = qr(rho.clone());
    let first = (t1 + &rq).ceil().to_i128().expect("ceil fits");
    let last = floor_i128(&(t2 - &rq));
    let overlap = |a: i128| {
        let lo = std::cmp::max(&qi(a) - &rq, t1.clone());
        let hi = std::cmp::min(&qi(a) + &rq, t2.clone());
        if hi > lo {
            &hi - &lo
        } else {
            Quad::zero()
        }
    };
    let side_lo = floor_i128(&(t1 - &rq));
    let side_hi = floor_i128(&(t2 + &rq)) + 1;
    let mut acc = Quad::zero();
    let mut edge = |range: std::ops::RangeInclusive<i128>| {
        for a in range {
            if c.contains(a) {
                acc = &acc + &overlap(a);
            }
        }
    };
    if first <= last {
        edge(side_lo..=first - 1);
        edge(last + 1..=side_hi);
        let inside = c.below(last + 1) - c.below(first);
        acc = &acc + &qr(rho * &Rational::from_i128(2 * inside, 1));
    } else {
        edge(side_lo..=side_hi);
    }
    acc
}

/// `meas(B ∩ A′_q)` for every piece of `B`.
pub fn restricted_ball_measure(q: u64, rho: &Rational, gamma: &Quad, mask: &crate::overlaps::Bitset, ball: &CircleIntervalSet) -> Quad {
    let c = ResidueCounter::new(q, mask);
    let qq = Rational::from(q);
    let mut acc = Quad::zero();
    for (l, r) in ball.pieces() {
        let t1 = &qr(l * &qq) - gamma;
        let t2 = &qr(r * &qq) - gamma;
        acc = &acc + &restricted_meet(&c, &t1, &t2, rho);
    }
    acc.scale(&qq.recip())
}

/// Verdicts of `meas(B ∩ A′_q) ≤ (1+δ)·meas(B)·meas(A′_q)` per ball.
pub fn bhv_local_check(
    balls: &[CircleIntervalSet],
    q_lo: u64,
    q_hi: u64,
    psi: &PsiSpec,
    gamma: &GammaValue,
    delta: &Rational,
    exec: Exec,
) -> Result<Vec<BhvReport>> {
    let Some(g) = gamma.exact() else {
        return Err(Error::Invalid("the local check needs an exact γ".into()));
    };
    if let Some(i) = balls.iter().position(|b| b.measure().is_zero()) {
        return Err(Error::Invalid(format!("ball {i} has measure zero")));
    }
    if q_lo == 0 || q_hi < q_lo {
        return Err(Error::Invalid(format!("bad q range {q_lo}..={q_hi}")));
    }
    let factor = Rational::one() + delta;
    let per_q: Vec<Result<Vec<(Quad, bool)>>> = exec.map_range(q_lo, q_hi + 1, |q| {
        let rho = psi.set_radius(q)?;
        let (_, mask) = sq_bits(q, &mut gamma.clone())?;
        let aq = &rho * &Rational::new(2 * mask.count() as u64, q);
        balls
            .iter()
            .map(|b| {
                let lhs = restricted_ball_measure(q, &rho, &g, &mask, b);
                let base = b.measure() * &aq;
                let ok = lhs <= qr(&base * &factor);
                let ratio = if base.is_zero() { Quad::zero() } else { lhs.scale(&base.recip()) };
                Ok((ratio, ok))
            })
            .collect()
    });
    let per_q: Vec<Vec<(Quad, bool)>> = per_q.into_iter().collect::<Result<_>>()?;
    Ok(balls
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let col: Vec<&(Quad, bool)> = per_q.iter().map(|row| &row[i]).collect();
            let (j, max) = col.iter().enumerate().max_by(|a, b| a.1 .0.cmp(&b.1 .0)).unwrap();
            BhvReport {
                ball: i,
                measure: b.measure().clone(),
                q0: first_tail(q_lo, &col, |x| x.1),
                violations: col.iter().filter(|x| !x.1).count(),
                max_ratio: max.0.clone(),
                max_at: q_lo + j as u64,
            }
        })
        .collect())
}

/// `x` seen only through shrinking rational bounds.
pub fn enclosure_from_quad(x: &Quad, bits: u32) -> GammaValue {
    GammaValue::Enclosure(RealEnclosure::from_quad(x, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithfn::eta_gcdsum;
    use crate::exactsets::build_aq;
    use crate::schmidt::build_aq_prime;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn arcs(v: &[(&str, &str)]) -> CircleIntervalSet {
        let v: Vec<_> = v.iter().map(|(a, b)| (r(a), r(b))).collect();
        CircleIntervalSet::normalize(&v).unwrap()
    }

    #[test]
    fn bc_identical_sets() {
        let e = arcs(&[("0", "1/2")]);
        let m = OverlapMatrix::from_sets(&vec![e; 20], &[1, 5, 10]).unwrap();
        for qp in [1, 5, 10, 20] {
            assert_eq!(bc_lower_bound(&m, qp).unwrap(), qr(r("1/2")));
        }
    }

    #[test]
    fn bc_alternating_sets() {
        let (e, f) = (arcs(&[("0", "1/2")]), arcs(&[("1/2", "1")]));
        let sets: Vec<_> = (0..40).map(|i| if i % 2 == 0 { e.clone() } else { f.clone() }).collect();
        let m = OverlapMatrix::from_sets(&sets, &[10, 20]).unwrap();
        // Independent halves: (Q/2)² over Q²/4.
        for qp in [10, 20, 40] {
            assert_eq!(bc_lower_bound(&m, qp).unwrap(), qr(Rational::one()));
        }
        assert_eq!(*m.pair_sum(40).unwrap(), qr(Rational::from(400)));
    }

    #[test]
    fn bc_bernoulli_events() {
        // Sample space of 4000 equally likely points; each event keeps a point
        // with probability 1/5.
        use rand::Rng;
        let mut rng = stream(7, "bernoulli");
        let points = 4000;
        let events: Vec<Vec<bool>> = (0..60).map(|_| (0..points).map(|_| rng.gen_bool(0.2)).collect()).collect();
        let mu = |q: u64| qr(Rational::new(events[q as usize - 1].iter().filter(|&&b| b).count() as u64, points as u64));
        let pair = |q: u64, s: u64| {
            let (a, b) = (&events[q as usize - 1], &events[s as usize - 1]);
            qr(Rational::new(a.iter().zip(b).filter(|(x, y)| **x && **y).count() as u64, points as u64))
        };
        let m = OverlapMatrix::from_fn(60, &[5, 15], mu, pair, Exec::Sequential).unwrap();
        let ratios: Vec<f64> = [5, 15, 60].iter().map(|&q| bc_lower_bound(&m, q).unwrap().to_f64()).collect();
        // Exact value for p = 1/5 is Q/(Q + 4): 0.556, 0.789, 0.9375.
        for (got, q) in ratios.iter().zip([5.0, 15.0, 60.0]) {
            let want = q / (q + 4.0);
            assert!((got - want).abs() < 0.05, "{got} vs {want}");
        }
        assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2]);
    }

    #[test]
    fn chung_erdos_examples() {
        let a = arcs(&[("1/10", "3/10")]);
        assert_eq!(chung_erdos_from(&[a.clone()]).unwrap(), qr(r("1/5")));
        let b = arcs(&[("1/2", "6/10")]);
        assert_eq!(chung_erdos_from(&[a, b]).unwrap(), qr(r("3/10")));
        assert!(chung_erdos_from::<Rational>(&[]).is_err());
        let a2 = build_aq(2, &Rational::zero(), &r("1/8")).unwrap();
        let a4 = build_aq(4, &Rational::zero(), &r("1/8")).unwrap();
        let bound = chung_erdos_from(&[a2.clone(), a4.clone()]).unwrap();
        let union = union_measure(&[a2, a4]);
        // μ = 1/4 each, overlap 1/8: (1/2)²/(1/2 + 1/4) = 1/3 ≤ 3/8.
        assert_eq!(bound, qr(r("1/3")));
        assert_eq!(union, r("3/8"));
    }

    #[test]
    fn bounds_below_union_small_q() {
        let psi = PsiSpec::recip();
        for gamma in [Rational::zero(), r("1/3"), r("2/7")] {
            let sets: Vec<_> = (1..=64).map(|q| build_aq(q, &gamma, &psi.set_radius(q).unwrap()).unwrap()).collect();
            let m = OverlapMatrix::from_sets(&sets, &[8, 16, 32]).unwrap();
            let t = OverlapMatrix::from_targets(64, &[8, 16, 32], &psi, &TargetSeq::constant(gamma.clone()), Exec::default()).unwrap();
            assert_eq!(m.pair_sums, t.pair_sums);
            for &q in &[8u64, 16, 32, 64] {
                let b = bc_lower_bound(&m, q).unwrap();
                assert!(b <= qr(union_measure(&sets[..q as usize])));
                assert!(b <= qr(Rational::one()));
            }
            let mut prev = Quad::zero();
            for (i, s) in m.pair_sums.iter().enumerate() {
                assert!(*s >= prev);
                assert!(*s >= m.measure_sum(m.grid[i]));
                prev = s.clone();
            }
        }
    }

    #[test]
    fn bc_rejects_empty() {
        let m = OverlapMatrix::from_sets(&[CircleIntervalSet::<Rational>::empty()], &[]).unwrap();
        assert!(bc_lower_bound(&m, 1).is_err());
        assert!(bc_lower_bound(&m, 2).is_err());
    }

    #[test]
    fn eta_pair_identity() {
        for q in 1..=500 {
            assert_eq!(eta_pair_sum(q), eta_gcdsum(q), "q = {q}");
        }
    }

    #[test]
    fn yu_examples() {
        let qs = [1u64, 2, 3, 5, 7, 11, 1 << 20];
        let eta: Vec<Rational> = qs.iter().map(|&q| eta_gcdsum(q)).collect();
        let w = vec![Rational::one(); qs.len()];
        let d = yu_classes(&qs, &eta, &w).unwrap();
        for &q in &qs[..6] {
            assert_eq!(d.class_of(q), Some(0));
        }
        assert_eq!(eta[6], Rational::from(11));
        assert_eq!(d.class_of(1 << 20), Some(3));
        assert_eq!(d.sigma[&0], Rational::from(6));
        assert_eq!(d.len(), qs.len());
        assert!(yu_classes(&[4], &[r("1/2")], &[Rational::one()]).is_err());
    }

    #[test]
    fn yu_default_partition() {
        let d = yu_default(300, &PsiSpec::recip()).unwrap();
        assert_eq!(d.len(), 300);
        for (&l, qs) in &d.classes {
            for &q in qs {
                let e = eta_gcdsum(q);
                assert!(Rational::from(1u64 << l) <= e && e < Rational::from(2u64 << l));
            }
            assert!(!d.sigma[&l].is_negative());
        }
    }

    #[test]
    fn extra_div_examples() {
        let eps = Rational::one();
        for q in 1..=2 {
            assert!(extra_div_weight(q, 3, &eps).unwrap().contains(&Rational::one()));
        }
        // ⌈e⁴⌉ = 55: √ln 55 · (ln ln 55)² ≈ 3.857.
        let w = extra_div_weight(55, 2, &eps).unwrap();
        let direct = 1.0 / ((55f64).ln().sqrt() * (55f64).ln().ln().powi(2));
        assert!((w.mid_f64() - direct).abs() < 1e-12);
        assert!((w.mid_f64() - 0.260).abs() < 0.005);
        assert!(extra_div_weight(10, 1, &eps).is_err());
    }

    #[test]
    fn extra_div_monotone() {
        let eps = r("1/10");
        for k in [2, 3, 4] {
            let mut prev = extra_div_weight(16, k, &eps).unwrap();
            for q in (17..4000).step_by(7) {
                let w = extra_div_weight(q, k, &eps).unwrap();
                assert!(!prev.certainly_lt(&w), "k = {k}, q = {q}");
                prev = w;
            }
        }
    }

    #[test]
    fn condensation_examples() {
        let c = condensation_partial(|q| Rational::new(1, q), 20).unwrap();
        assert_eq!(c.partials[19], Rational::from(20));
        assert!(c.looks_divergent);
        let c = condensation_partial(|q| Rational::from(q).pow(-2), 30).unwrap();
        assert_eq!(c.partials[29], Rational::from(2) - Rational::pow2_neg(29));
        assert!(!c.looks_divergent);
        let psi = PsiSpec::constant(Rational::one());
        let c = condensation_partial(|q| psi.value(q).unwrap().min(Rational::new(1, q)), 20).unwrap();
        assert_eq!(c.partials[19], Rational::from(20));
        let bad = condensation_partial(|q| Rational::from(q % 3), 10);
        assert!(matches!(bad, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn h_admissibility_examples() {
        let tol = r("1/1000");
        let grid: Vec<u64> = (1..200).collect();
        let lin = h_admissibility(|x| HpReal::from_rational(x, DEFAULT_BITS), 40, &grid, &tol).unwrap();
        assert!(lin.flat && lin.increasing);
        assert!(lin.max_doubling.contains(&Rational::from(2)));
        let lg = h_admissibility(|x| HpReal::from_rational(x, DEFAULT_BITS).log_clamped(), 40, &grid, &tol).unwrap();
        assert!(!lg.flat);
        let sq = h_admissibility(
            |x| {
                let l = HpReal::from_rational(x, DEFAULT_BITS).log_clamped();
                l.mul(&l)
            },
            60,
            &grid,
            &tol,
        )
        .unwrap();
        assert!(sq.flat);
        assert!(sq.max_doubling.hi() < Rational::from(3));
    }

    #[test]
    fn count_hits_examples() {
        let psi = PsiSpec::constant(r("1/4"));
        let zero = TargetSeq::constant(Rational::zero());
        for q_max in [1u64, 7, 100] {
            let n = count_hits(&mut GammaValue::from(Rational::zero()), &PsiSpec::recip(), &zero, q_max).unwrap();
            assert_eq!(n.exact(), Some(q_max));
            let n = count_hits(&mut GammaValue::from(r("1/2")), &psi, &zero, q_max).unwrap();
            assert_eq!(n.exact(), Some(q_max / 2));
        }
        // ‖q/4‖ = 1/4 at odd q is a tie, so a miss.
        let n = count_hits(&mut GammaValue::from(r("1/4")), &psi, &zero, 100).unwrap();
        assert_eq!(n.exact(), Some(25));
    }

    #[test]
    fn lattice_matches_generic() {
        let seed = 11;
        let gamma = TargetSeq::random(seed);
        for psi in [PsiSpec::power(Rational::one(), r("1/2")), PsiSpec::recip(), PsiSpec::parse("logt").unwrap()] {
            for i in 0..4 {
                let a = dyadic_at(seed, "alpha", i);
                let fast = count_hits(&mut GammaValue::from(a.clone()), &psi, &gamma, 3000).unwrap();
                let slow = count_hits_generic(&mut GammaValue::from(a), &psi, &gamma, 3000).unwrap();
                assert_eq!(fast, slow, "{psi}");
                assert!(fast.exact().is_some());
            }
        }
    }

    #[test]
    fn surd_and_enclosure_alpha() {
        let a = Quad::named("sqrt2-1").unwrap();
        let psi = PsiSpec::power(Rational::one(), r("1/2"));
        let gamma = TargetSeq::constant(r("1/3"));
        let exact = count_hits(&mut GammaValue::from(a.clone()), &psi, &gamma, 2000).unwrap();
        let enc = count_hits(&mut enclosure_from_quad(&a, 64), &psi, &gamma, 2000).unwrap();
        assert_eq!(exact.exact(), enc.exact());
        let surd_gamma = TargetSeq::Constant(Quad::named("sqrt3").unwrap());
        assert!(count_hits(&mut GammaValue::from(a), &psi, &surd_gamma, 3).is_err());
    }

    #[test]
    fn lattice_threshold_brackets() {
        let psi = PsiSpec::power(Rational::one(), r("1/2"));
        for q in [4u64, 5, 99, 100, 12345] {
            let t = lattice_threshold(&psi, q).unwrap();
            assert!(!psi.lt(q, &Rational::new(t, DYADIC_ONE)).unwrap());
            assert!(psi.lt(q, &Rational::new(t - 1, DYADIC_ONE)).unwrap());
        }
        for q in 1..4 {
            assert_eq!(lattice_threshold(&psi, q).unwrap(), THRESHOLD_CAP);
        }
    }

    #[test]
    fn sprindzuk_small() {
        let psi = PsiSpec::power(Rational::one(), r("1/2"));
        let rows = sprindzuk_experiment(3, 5, &psi, &[1000, 10_000], Exec::default()).unwrap();
        assert_eq!(rows.len(), 10);
        for row in &rows {
            let direct = count_hits_generic(&mut GammaValue::from(row.alpha.clone()), &psi, &TargetSeq::random(3), row.q).unwrap();
            if row.q == 1000 {
                assert_eq!(direct.exact(), Some(row.n));
            }
            assert!(row.phi_lo <= row.phi_hi);
            let ratio = row.ratio().to_f64();
            assert!(ratio > 0.5 && ratio < 1.5, "{ratio}");
        }
        let again = sprindzuk_experiment(3, 5, &psi, &[1000, 10_000], Exec::Sequential).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn uniformity_examples() {
        let psi = PsiSpec::recip();
        let zero = TargetSeq::constant(Rational::zero());
        let full = CircleIntervalSet::full();
        let rep = uniformity_check(&full, &psi, &zero, 1, 200, Exec::default()).unwrap();
        assert!(rep.ratios.iter().all(|x| *x == qr(Rational::one())));
        assert_eq!(rep.q0, Some(1));
        let u = arcs(&[("3/10", "2/5")]);
        let rep = uniformity_check(&u, &psi, &zero, 1, 2000, Exec::default()).unwrap();
        assert!(rep.q0.unwrap() <= 1000);
        let two = arcs(&[("1/10", "2/10"), ("7/10", "8/10")]);
        let rep = uniformity_check(&two, &psi, &zero, 1, 2000, Exec::default()).unwrap();
        assert!(rep.q0.unwrap() <= 1000);
    }

    #[test]
    fn uniformity_matches_sets() {
        let psi = PsiSpec::recip();
        let u = arcs(&[("3/10", "2/5"), ("9/10", "1")]);
        for gamma in [TargetSeq::constant(r("1/3")), TargetSeq::Constant(Quad::named("sqrt2-1").unwrap()), TargetSeq::random(5)] {
            for q in 1..=80 {
                let rho = psi.set_radius(q).unwrap();
                let g = gamma.gamma(q);
                let set = build_aq(q, &g, &rho).unwrap();
                let uq = CircleIntervalSet::<Quad>::normalize(&[(qr(r("3/10")), qr(r("2/5"))), (qr(r("9/10")), qr(Rational::one()))]).unwrap();
                assert_eq!(aq_meet_measure(q, &rho, &g, &u), set.intersect(&uq).measure().clone(), "q = {q}");
            }
        }
    }

    #[test]
    fn restricted_ball_matches_sets() {
        let psi = PsiSpec::recip();
        let balls = [arcs(&[("0", "1/2")]), arcs(&[("9/20", "11/20")]), arcs(&[("19/20", "1"), ("0", "1/50")]), arcs(&[("1/3", "3001/9000")])];
        for gamma in [GammaValue::from(Rational::zero()), GammaValue::from(r("1/3")), GammaValue::from(Quad::named("sqrt2-1").unwrap())] {
            let g = gamma.exact().unwrap();
            for q in 1..=60 {
                let rho = psi.set_radius(q).unwrap();
                let set = build_aq_prime(q, &rho, &mut gamma.clone()).unwrap();
                let (_, mask) = sq_bits(q, &mut gamma.clone()).unwrap();
                for b in &balls {
                    let bq: Vec<(Quad, Quad)> = b.pieces().iter().map(|(l, h)| (qr(l.clone()), qr(h.clone()))).collect();
                    let bq = CircleIntervalSet::normalize(&bq).unwrap();
                    let want = set.intersect(&bq).measure().clone();
                    assert_eq!(restricted_ball_measure(q, &rho, &g, &mask, b), want, "q = {q}");
                }
            }
        }
    }

    #[test]
    fn bhv_examples() {
        let psi = PsiSpec::recip();
        let zero = GammaValue::from(Rational::zero());
        let balls = vec![CircleIntervalSet::full(), arcs(&[("0", "1/2")]), arcs(&[("1/2", "51/100")])];
        let rep = bhv_local_check(&balls, 1, 3000, &psi, &zero, &r("1/10"), Exec::default()).unwrap();
        assert_eq!(rep[0].q0, Some(1));
        assert_eq!(rep[0].violations, 0);
        assert!(rep[1].q0.is_some());
        assert!(rep[2].q0.unwrap() >= rep[1].q0.unwrap());
    }

    proptest! {
        #[test]
        fn count_hits_monotone(num in 0u32..u32::MAX, c in 1u64..8, q_max in 1u64..400) {
            let a = Rational::new(num, DYADIC_ONE);
            let gamma = TargetSeq::random(9);
            let small = PsiSpec::power(Rational::new(c, 16), Rational::one());
            let big = PsiSpec::power(Rational::new(c + 1, 16), Rational::one());
            let n = count_hits(&mut GammaValue::from(a.clone()), &small, &gamma, q_max).unwrap().lo;
            let n2 = count_hits(&mut GammaValue::from(a.clone()), &big, &gamma, q_max).unwrap().lo;
            let n3 = count_hits(&mut GammaValue::from(a), &small, &gamma, q_max + 1).unwrap().lo;
            prop_assert!(n <= n2);
            prop_assert!(n <= n3 && n3 <= n + 1);
        }

        #[test]
        fn yu_is_partition(qs in proptest::collection::vec(1u64..5000, 1..60)) {
            let eta: Vec<Rational> = qs.iter().map(|&q| eta_gcdsum(q)).collect();
            let w: Vec<Rational> = qs.iter().map(|&q| Rational::new(1, q)).collect();
            let d = yu_classes(&qs, &eta, &w).unwrap();
            prop_assert_eq!(d.len(), qs.len());
            for (q, e) in qs.iter().zip(&eta) {
                let l = d.classes.iter().find(|(_, v)| v.contains(q)).map(|(&l, _)| l).unwrap();
                prop_assert_eq!(l as f64, e.to_f64().log2().floor());
            }
        }

        #[test]
        fn bc_at_most_one(seed in 0u64..1000, n in 1usize..12) {
            let sets: Vec<CircleIntervalSet> = (0..n as u64)
                .map(|i| {
                    let a = dyadic_at(seed, "l", i);
                    let b = &a + &Rational::new(1 + word(seed, i) % 400, 1000);
                    CircleIntervalSet::normalize(&[(a, b)]).unwrap()
                })
                .collect();
            let ce = chung_erdos_from(&sets).unwrap();
            prop_assert!(ce <= qr(union_measure(&sets)));
            prop_assert!(ce <= qr(Rational::one()));
        }
    }

    fn word(seed: u64, i: u64) -> u64 {
        crate::stream::word_at(seed, "w", i) as u64
    }
}
