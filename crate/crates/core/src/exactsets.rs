//! Finite unions of arcs on the circle `[0,1)` and the target sets `A_q`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numeric::{RealEnclosure, Rational, Scalar};

/// Sorted, pairwise disjoint pieces inside `[0,1]`.
///
/// An arc that wraps past 1 is stored as two pieces, `(l, 1)` and `(0, r)`;
/// [`CircleIntervalSet::arcs`] rejoins them.
#[derive(Clone, Debug)]
pub struct CircleIntervalSet<S: Scalar = Rational> {
    pieces: Vec<(S, S)>,
    measure: S,
    saturated: bool,
}

/// Equality compares the point sets; the saturation flag is ignored.
impl<S: Scalar> PartialEq for CircleIntervalSet<S> {
    fn eq(&self, other: &Self) -> bool {
        self.pieces == other.pieces
    }
}

impl<S: Scalar> Eq for CircleIntervalSet<S> {}

impl<S: Scalar> CircleIntervalSet<S> {
    pub fn empty() -> Self {
        CircleIntervalSet { pieces: Vec::new(), measure: S::zero(), saturated: false }
    }

    pub fn full() -> Self {
        CircleIntervalSet { pieces: vec![(S::zero(), S::one())], measure: S::one(), saturated: false }
    }

    /// Builds the set covered by `arcs`, each read mod 1.
    ///
    /// An arc longer than 1 makes the result the full circle with
    /// [`is_saturated`](Self::is_saturated) set.
    pub fn normalize(arcs: &[(S, S)]) -> Result<Self> {
        let one = S::one();
        let mut pieces = Vec::with_capacity(arcs.len() + 1);
        let mut saturated = false;
        let mut full = false;
        for (l, r) in arcs {
            let len = r.sub(l);
            match len.cmp(&S::zero()) {
                Ordering::Less => {
                    return Err(Error::Invalid(format!("arc ({l:?}, {r:?}) has negative length")))
                }
                Ordering::Equal => continue,
                Ordering::Greater => {}
            }
            match len.cmp(&one) {
                Ordering::Greater => {
                    saturated = true;
                    full = true;
                    continue;
                }
                Ordering::Equal => {
                    full = true;
                    continue;
                }
                Ordering::Less => {}
            }
            let shift = S::from_integer(l.floor());
            let l0 = l.sub(&shift);
            let r0 = r.sub(&shift);
            if r0 <= one {
                pieces.push((l0, r0));
            } else {
                pieces.push((l0, one.clone()));
                pieces.push((S::zero(), r0.sub(&one)));
            }
        }
        if full {
            let mut s = Self::full();
            s.saturated = saturated;
            return Ok(s);
        }
        Ok(Self::from_unsorted(pieces))
    }

    fn from_unsorted(mut pieces: Vec<(S, S)>) -> Self {
        pieces.sort_by(|a, b| a.0.cmp(&b.0));
        Self::from_sorted(pieces)
    }

    /// Merges overlapping or touching pieces that are already sorted by left end.
    fn from_sorted(pieces: Vec<(S, S)>) -> Self {
        let mut out: Vec<(S, S)> = Vec::with_capacity(pieces.len());
        for (l, r) in pieces {
            if l >= r {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if l <= last.1 {
                    if r > last.1 {
                        last.1 = r;
                    }
                    continue;
                }
            }
            out.push((l, r));
        }
        let mut measure = S::zero();
        for (l, r) in &out {
            measure = measure.add(&r.sub(l));
        }
        CircleIntervalSet { pieces: out, measure, saturated: false }
    }

    pub fn measure(&self) -> &S {
        &self.measure
    }

    /// True when some input arc had length greater than 1.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[(S, S)] {
        &self.pieces
    }

    /// Maximal arcs, with a piece ending at 1 glued to one starting at 0.
    /// Wrapped arcs have right end above 1.
    pub fn arcs(&self) -> Vec<(S, S)> {
        let n = self.pieces.len();
        let one = S::one();
        if n >= 2 && self.pieces[0].0.is_zero() && self.pieces[n - 1].1 == one {
            let mut out: Vec<(S, S)> = self.pieces[1..n - 1].to_vec();
            let (l, _) = &self.pieces[n - 1];
            let (_, r) = &self.pieces[0];
            out.push((l.clone(), r.add(&one)));
            out
        } else {
            self.pieces.clone()
        }
    }

    pub fn contains(&self, x: &S) -> bool {
        let x = x.fract();
        // Endpoints included; measure-zero convention.
        let idx = self.pieces.partition_point(|(l, _)| *l <= x);
        idx > 0 && x <= self.pieces[idx - 1].1
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (a, b) = (&self.pieces, &other.pieces);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let l = if a[i].0 > b[j].0 { &a[i].0 } else { &b[j].0 };
            let r = if a[i].1 < b[j].1 { &a[i].1 } else { &b[j].1 };
            if l < r {
                out.push((l.clone(), r.clone()));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_sorted(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = Vec::with_capacity(self.pieces.len() + other.pieces.len());
        let (a, b) = (&self.pieces, &other.pieces);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 <= b[j].0) {
                all.push(a[i].clone());
                i += 1;
            } else {
                all.push(b[j].clone());
                j += 1;
            }
        }
        let mut s = Self::from_sorted(all);
        s.saturated = self.saturated || other.saturated;
        s
    }

    /// Measure of the symmetric difference.
    pub fn symmetric_difference_measure(&self, other: &Self) -> S {
        let both = self.intersect(other).measure;
        self.measure.add(&other.measure).sub(&both.add(&both))
    }
}

/// Pieces of `A_q` with center offset `gamma` and radius `psi`, unsorted.
fn aq_arcs<S: Scalar>(q: u64, gamma: &S, psi: &Rational) -> Vec<(S, S)> {
    let qr = Rational::from(q).recip();
    let g = gamma.fract();
    let lo0 = g.sub(&S::from_rational(psi.clone()));
    let hi0 = g.add(&S::from_rational(psi.clone()));
    (0..q)
        .map(|a| {
            let a = S::from_rational(Rational::from(a));
            (lo0.add(&a).mul_rational(&qr), hi0.add(&a).mul_rational(&qr))
        })
        .collect()
}

/// `{α : ‖qα − γ‖ < ψ}` on the circle.
pub fn build_aq<S: Scalar>(q: u64, gamma: &S, psi: &Rational) -> Result<CircleIntervalSet<S>> {
    check_q_psi(q, psi)?;
    if psi.is_zero() {
        return Ok(CircleIntervalSet::empty());
    }
    CircleIntervalSet::normalize(&aq_arcs(q, gamma, psi))
}

/// Union of the arcs of `A_q` whose index lies in `residues`.
pub fn build_aq_restricted<S: Scalar>(
    q: u64,
    gamma: &S,
    psi: &Rational,
    residues: &[u64],
) -> Result<CircleIntervalSet<S>> {
    check_q_psi(q, psi)?;
    if psi.is_zero() || residues.is_empty() {
        return Ok(CircleIntervalSet::empty());
    }
    let qr = Rational::from(q).recip();
    let lo0 = gamma.sub(&S::from_rational(psi.clone()));
    let hi0 = gamma.add(&S::from_rational(psi.clone()));
    let arcs: Vec<(S, S)> = residues
        .iter()
        .map(|&a| {
            let a = S::from_rational(Rational::from(a));
            (lo0.add(&a).mul_rational(&qr), hi0.add(&a).mul_rational(&qr))
        })
        .collect();
    CircleIntervalSet::normalize(&arcs)
}

fn check_q_psi(q: u64, psi: &Rational) -> Result<()> {
    if q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    if psi.is_negative() {
        return Err(Error::Invalid(format!("psi = {psi} is negative")));
    }
    if *psi > Rational::new(1, 2) {
        return Err(Error::Invalid(format!("psi = {psi} exceeds 1/2; clamp before building")));
    }
    Ok(())
}

/// `A_q` for an enclosed `γ`, built from a dyadic approximation.
#[derive(Clone, Debug)]
pub struct EnclosedAq {
    pub set: CircleIntervalSet<Rational>,
    /// Upper bound on the measure of the symmetric difference with the true set.
    pub set_error: Rational,
    /// Upper bound on `|measure(set) − measure(true set)|`.
    pub measure_error: Rational,
}

pub fn build_aq_enclosed(
    q: u64,
    gamma: &mut RealEnclosure,
    psi: &Rational,
    precision: u32,
) -> Result<EnclosedAq> {
    gamma.refine(&Rational::pow2_neg(precision))?;
    let set = build_aq(q, gamma.lo(), psi)?;
    // Every arc moves by at most width/q, and shifting preserves length.
    let set_error = Rational::from(2) * gamma.width();
    Ok(EnclosedAq { set, set_error, measure_error: Rational::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Quad;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn set(arcs: &[(&str, &str)]) -> CircleIntervalSet {
        let v: Vec<_> = arcs.iter().map(|(a, b)| (r(a), r(b))).collect();
        CircleIntervalSet::normalize(&v).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = set(&[("0.2", "0.4"), ("0.3", "0.5")]);
        assert_eq!(s.pieces(), &[(r("1/5"), r("1/2"))]);
        assert_eq!(*s.measure(), r("3/10"));

        let s = set(&[("0.9", "1.1")]);
        assert_eq!(s.pieces(), &[(r("0"), r("1/10")), (r("9/10"), r("1"))]);
        assert_eq!(s.arcs(), vec![(r("9/10"), r("11/10"))]);
        assert_eq!(*s.measure(), r("1/5"));

        let s = set(&[]);
        assert!(s.is_empty());
        assert_eq!(*s.measure(), Rational::zero());
    }

    #[test]
    fn long_arc_saturates() {
        let s = set(&[("0.1", "1.2")]);
        assert!(s.is_saturated());
        assert_eq!(*s.measure(), Rational::one());
        let s = set(&[("0.1", "1.1")]);
        assert!(!s.is_saturated());
        assert_eq!(*s.measure(), Rational::one());
        assert!(CircleIntervalSet::normalize(&[(r("1/2"), r("1/4"))]).is_err());
    }

    #[test]
    fn intersect_examples() {
        let b = set(&[("0.1", "0.3"), ("0.7", "0.8")]);
        assert_eq!(CircleIntervalSet::full().intersect(&b), b);
        let c = set(&[("0.4", "0.6")]);
        assert_eq!(*b.intersect(&c).measure(), Rational::zero());

        let psi = r("1/12");
        let a3 = build_aq(3, &Rational::zero(), &psi).unwrap();
        let a6 = build_aq(6, &Rational::zero(), &psi).unwrap();
        let x = a3.intersect(&a6);
        assert_eq!(x.arcs().len(), 3);
        for (l, rr) in x.arcs() {
            assert_eq!(rr - l, r("1/36"));
        }
        assert_eq!(*x.measure(), r("1/12"));
    }

    #[test]
    fn build_aq_examples() {
        let a = build_aq(2, &Rational::zero(), &r("1/4")).unwrap();
        assert_eq!(*a.measure(), r("1/2"));
        assert!(a.contains(&r("0")) && a.contains(&r("1/2")) && !a.contains(&r("1/4")));
        let a = build_aq(5, &r("1/3"), &r("1/10")).unwrap();
        assert_eq!(a.arcs().len(), 5);
        assert_eq!(*a.measure(), r("1/5"));
        assert!(build_aq(5, &r("0"), &r("3/5")).is_err());
        assert!(build_aq(5, &r("0"), &r("0")).unwrap().is_empty());
        // psi = 1/2 fills the circle.
        assert_eq!(*build_aq(4, &r("1/7"), &r("1/2")).unwrap().measure(), Rational::one());
    }

    #[test]
    fn enclosed_gamma() {
        let g = Quad::named("sqrt2-1").unwrap();
        let mut e = RealEnclosure::from_quad(&g, 8);
        let psi = r("1/7");
        let coarse = build_aq_enclosed(3, &mut e, &psi, 40).unwrap();
        assert!(coarse.set_error <= Rational::pow2_neg(39));
        let diff = (coarse.set.measure() - &r("2/7")).abs();
        assert!(diff <= Rational::pow2_neg(39));
        let mut e2 = RealEnclosure::from_quad(&g, 8);
        let fine = build_aq_enclosed(3, &mut e2, &psi, 80).unwrap();
        assert!(coarse.set.symmetric_difference_measure(&fine.set) <= coarse.set_error);
        // The exact surd set sits within the certified distance too.
        let exact = build_aq(3, &g, &psi).unwrap();
        let lifted = CircleIntervalSet::<Quad>::normalize(
            &coarse
                .set
                .pieces()
                .iter()
                .map(|(a, b)| (Quad::from(a.clone()), Quad::from(b.clone())))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(exact.symmetric_difference_measure(&lifted) <= Quad::from(coarse.set_error));
    }

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..40).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn arcs() -> impl Strategy<Value = CircleIntervalSet> {
        prop::collection::vec((small_rat(), 0i64..30, 1i64..40), 0..6).prop_map(|v| {
            let a: Vec<_> =
                v.into_iter().map(|(l, n, d)| (l.clone(), l + Rational::new(n, d * 2))).collect();
            CircleIntervalSet::normalize(&a).unwrap()
        })
    }

    proptest! {
        #[test]
        fn aq_measure_is_two_psi(q in 1u64..200, g in small_rat(), pn in 0i64..=50) {
            let psi = Rational::new(pn, 100);
            let a = build_aq(q, &g, &psi).unwrap();
            prop_assert_eq!(a.measure(), &(Rational::from(2) * &psi));
            let b = build_aq(q, &(&g + &Rational::one()), &psi).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn normalize_idempotent(s in arcs()) {
            let again = CircleIntervalSet::normalize(s.pieces()).unwrap();
            prop_assert_eq!(&again, &s);
            let from_arcs = CircleIntervalSet::normalize(&s.arcs()).unwrap();
            prop_assert_eq!(&from_arcs, &s);
            let sum: Rational = s.pieces().iter().map(|(l, r)| r - l).sum();
            prop_assert_eq!(&sum, s.measure());
            prop_assert!(*s.measure() <= Rational::one());
        }

        #[test]
        fn intersect_laws(a in arcs(), b in arcs(), c in arcs()) {
            prop_assert_eq!(a.intersect(&b), b.intersect(&a));
            prop_assert_eq!(a.intersect(&b).intersect(&c), a.intersect(&b.intersect(&c)));
            prop_assert_eq!(a.intersect(&a), a.clone());
            let m = a.intersect(&b);
            prop_assert!(m.measure() <= a.measure() && m.measure() <= b.measure());
            // Inclusion-exclusion, exactly.
            let u = a.union(&b);
            prop_assert_eq!(u.measure() + m.measure(), a.measure() + b.measure());
        }

        #[test]
        fn additive_on_disjoint(a in arcs(), b in arcs()) {
            let only_b = {
                // b minus a, built from gaps of a.
                let mut gaps = Vec::new();
                let mut prev = Rational::zero();
                for (l, r) in a.pieces() {
                    gaps.push((prev.clone(), l.clone()));
                    prev = r.clone();
                }
                gaps.push((prev, Rational::one()));
                let comp = CircleIntervalSet::normalize(&gaps).unwrap();
                b.intersect(&comp)
            };
            prop_assert_eq!(a.intersect(&only_b).measure().clone(), Rational::zero());
            prop_assert_eq!(a.union(&only_b).measure().clone(), a.measure() + only_b.measure());
        }
    }
}
