//! CSV assembly and number rendering.

use num_bigint::BigInt;
use shrinklab::{Quad, Rational};

pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text, width: header.len() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.width, "row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

fn pow10(d: usize) -> BigInt {
    BigInt::from(10u32).pow(d as u32)
}

fn fixed(n: BigInt, digits: usize) -> String {
    let neg = n.sign() == num_bigint::Sign::Minus;
    let s = n.magnitude().to_string();
    let s = if s.len() <= digits { format!("{}{s}", "0".repeat(digits + 1 - s.len())) } else { s };
    let (i, f) = s.split_at(s.len() - digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{i}")
    } else {
        format!("{sign}{i}.{f}")
    }
}

/// `r` rounded down to `digits` places.
pub fn dec_floor(r: &Rational, digits: usize) -> String {
    fixed((r * &Rational::from_integer(pow10(digits))).floor(), digits)
}

/// `r` rounded up to `digits` places.
pub fn dec_ceil(r: &Rational, digits: usize) -> String {
    fixed((r * &Rational::from_integer(pow10(digits))).ceil(), digits)
}

pub fn dec(r: &Rational, digits: usize) -> String {
    r.to_decimal(digits)
}

pub fn quad_dec(x: &Quad, digits: usize) -> String {
    match x.as_rational() {
        Some(r) => dec(r, digits),
        None => {
            let bits = (digits as f64 / std::f64::consts::LOG10_2).ceil() as u32 + 16;
            let (lo, hi) = x.enclose(bits);
            dec(&((lo + hi) * Rational::new(1, 2)), digits)
        }
    }
}

pub fn b(v: bool) -> String {
    v.to_string()
}
