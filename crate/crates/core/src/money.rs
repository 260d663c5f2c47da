//! Fixed-point currency with three decimal places.
//!
//! One unit of [`Millicents`] is 0.001 of the base currency, so the usual
//! cloud price points ($0.136/h, $20.25 upfront) are exact and cost
//! comparisons between planners reduce to integer equality.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Number of fixed-point units per whole currency unit.
pub const SCALE: i64 = 1000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Millicents(pub i64);

impl Millicents {
    pub const ZERO: Millicents = Millicents(0);

    pub const fn new(raw: i64) -> Self {
        Millicents(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    /// Lossy conversion, for reporting only.
    pub fn as_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Multiplies by an instance/hour count.
    pub fn times(self, n: u64) -> Millicents {
        Millicents(self.0 * n as i64)
    }
}

impl fmt::Display for Millicents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{}{}.{:03}", sign, abs / SCALE as u64, abs % SCALE as u64)
    }
}

impl FromStr for Millicents {
    type Err = Error;

    /// Parses a plain decimal string with at most three fractional digits.
    /// Anything that would need rounding is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::invalid(format!("not a currency amount with at most 3 decimals: {s:?}"));
        let t = s.trim();
        let t = t.strip_prefix('$').unwrap_or(t);
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        // trailing zeros beyond the third place are harmless
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.len() > 3 {
            return Err(bad());
        }
        let whole: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
        let mut frac: i64 = 0;
        for (i, c) in frac_trimmed.chars().enumerate() {
            frac += (c as i64 - '0' as i64) * 10i64.pow(2 - i as u32);
        }
        let v = whole.checked_mul(SCALE).and_then(|w| w.checked_add(frac)).ok_or_else(bad)?;
        Ok(Millicents(if neg { -v } else { v }))
    }
}

impl Add for Millicents {
    type Output = Millicents;
    fn add(self, rhs: Self) -> Self {
        Millicents(self.0 + rhs.0)
    }
}

impl AddAssign for Millicents {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for Millicents {
    type Output = Millicents;
    fn sub(self, rhs: Self) -> Self {
        Millicents(self.0 - rhs.0)
    }
}

impl SubAssign for Millicents {
    fn sub_assign(&mut self, rhs: Self) {
        self.0 -= rhs.0;
    }
}

impl Neg for Millicents {
    type Output = Millicents;
    fn neg(self) -> Self {
        Millicents(-self.0)
    }
}

impl Mul<i64> for Millicents {
    type Output = Millicents;
    fn mul(self, rhs: i64) -> Self {
        Millicents(self.0 * rhs)
    }
}

impl Sum for Millicents {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        Millicents(iter.map(|m| m.0).sum())
    }
}

impl Serialize for Millicents {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Millicents {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MillicentsVisitor;

        impl Visitor<'_> for MillicentsVisitor {
            type Value = Millicents;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal currency amount such as \"0.136\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Millicents, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Millicents, E> {
                v.checked_mul(SCALE).map(Millicents).ok_or_else(|| E::custom("currency amount out of range"))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Millicents, E> {
                i64::try_from(v).map_err(|_| E::custom("currency amount out of range")).and_then(|v| self.visit_i64(v))
            }

            // Floats go through their shortest round-trip representation,
            // so 0.136 parses as exactly 136 units.
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Millicents, E> {
                if !v.is_finite() {
                    return Err(E::custom("currency amount must be finite"));
                }
                format!("{v}").parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(MillicentsVisitor)
    }
}
