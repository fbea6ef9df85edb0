//! Golden-value files.
//!
//! One `key = value` per line, `#` starts a comment, and a `tolerance = T`
//! line declares the allowed ratio between a fresh value and its golden one.

use crate::error::{Error, Result};
use crate::numeric::Rational;

pub const DEFAULT_TOLERANCE: (u64, u64) = (5, 4);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Baseline {
    pub tolerance: Rational,
    /// Entries in file order.
    pub entries: Vec<(String, Rational)>,
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline { tolerance: Rational::new(DEFAULT_TOLERANCE.0, DEFAULT_TOLERANCE.1), entries: Vec::new() }
    }
}

impl Baseline {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Baseline::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("baseline line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let v: Rational = v.parse().map_err(|_| Error::Parse(format!("baseline line {}: bad value `{v}`", i + 1)))?;
            if k == "tolerance" {
                out.tolerance = v;
            } else {
                out.set(k, v);
            }
        }
        Ok(out)
    }

    pub fn render(&self, digits: usize) -> String {
        let mut s = format!("tolerance = {}\n", self.tolerance.to_decimal(4));
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {}\n", v.to_decimal(digits)));
        }
        s
    }

    pub fn get(&self, key: &str) -> Option<&Rational> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn set(&mut self, key: &str, value: Rational) {
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    /// `current ≤ tolerance·golden`.
    pub fn admits(&self, key: &str, current: &Rational) -> Option<bool> {
        self.get(key).map(|g| *current <= g * &self.tolerance)
    }
}

/// What a golden key measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoldenKey {
    /// Upper bound on `ρ(Q)` for `ψ = 1/q` and a fixed `γ`.
    QiaRho { gamma: String, q_max: u64 },
    /// Largest class-sum ratio over `2 ≤ q ≤ q_max`.
    LemnMax { gamma: String, delta: Rational, q_max: u64 },
}

impl GoldenKey {
    pub fn parse(key: &str) -> Result<Self> {
        let parts: Vec<&str> = key.split('|').collect();
        let bad = || Error::Parse(format!("unknown golden key `{key}`"));
        match parts.as_slice() {
            ["qia_rho", g, q] => Ok(GoldenKey::QiaRho { gamma: g.to_string(), q_max: q.parse().map_err(|_| bad())? }),
            ["lemn_max", g, d, q] => Ok(GoldenKey::LemnMax {
                gamma: g.to_string(),
                delta: d.parse().map_err(|_| bad())?,
                q_max: q.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }

    pub fn render(&self) -> String {
        match self {
            GoldenKey::QiaRho { gamma, q_max } => format!("qia_rho|{gamma}|{q_max}"),
            GoldenKey::LemnMax { gamma, delta, q_max } => format!("lemn_max|{gamma}|{delta}|{q_max}"),
        }
    }
}

/// The keys recorded by default.
pub fn default_keys() -> Vec<GoldenKey> {
    let mut keys = Vec::new();
    for g in ["const:0", "const:1/3", "surd:sqrt2-1"] {
        for e in 8..=14 {
            keys.push(GoldenKey::QiaRho { gamma: g.into(), q_max: 1 << e });
        }
    }
    keys.push(GoldenKey::LemnMax { gamma: "surd:sqrt2-1".into(), delta: Rational::new(1, 5), q_max: 2048 });
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut b = Baseline::default();
        b.set("qia_rho|const:0|256", Rational::new(3, 2));
        b.set("lemn_max|surd:sqrt2-1|1/5|64", Rational::new(1, 8));
        let again = Baseline::parse(&b.render(12)).unwrap();
        assert_eq!(again, b);
        assert_eq!(again.admits("qia_rho|const:0|256", &Rational::new(15, 8)), Some(true));
        assert_eq!(again.admits("qia_rho|const:0|256", &Rational::new(19, 10)), Some(false));
        assert_eq!(again.admits("missing", &Rational::one()), None);
    }

    #[test]
    fn keys() {
        for k in default_keys() {
            assert_eq!(GoldenKey::parse(&k.render()).unwrap(), k);
        }
        assert!(GoldenKey::parse("qia_rho|x").is_err());
        assert!(Baseline::parse("just words").is_err());
    }
}
