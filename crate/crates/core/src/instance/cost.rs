//! Exact column costs.
//!
//! Costs are kept as integers in micro-units so that objective sums and
//! optimality comparisons never touch floating point.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of internal units per whole cost unit.
pub const COST_SCALE: i64 = 1_000_000;
const SCALE_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot represent `{0}` as an exact cost (at most 6 decimal places)")]
pub struct ParseCostError(pub String);

impl Cost {
    pub const ZERO: Cost = Cost(0);

    pub const fn from_units(units: i64) -> Self {
        Cost(units)
    }

    pub const fn from_int(v: i64) -> Self {
        Cost(v * COST_SCALE)
    }

    /// Raw scaled representation.
    pub const fn units(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / COST_SCALE as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_integral(self) -> bool {
        self.0 % COST_SCALE == 0
    }

    /// Parses a decimal literal such as `12`, `-3.25` or `1.5e-3` exactly.
    pub fn parse(s: &str) -> Result<Self, ParseCostError> {
        let err = || ParseCostError(s.to_string());
        let t = s.trim();
        let (neg, t) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(p) => (&t[..p], t[p + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        // digits * 10^(exp - frac_len) * SCALE
        let digits: String = format!("{int_part}{frac_part}");
        let digits = digits.trim_start_matches('0');
        let shift = exp as i64 - frac_part.len() as i64 + SCALE_DIGITS as i64;
        let mut units: i128 = 0;
        for b in digits.bytes() {
            units = units.checked_mul(10).ok_or_else(err)? + (b - b'0') as i128;
            if units > i64::MAX as i128 * 10 {
                return Err(err());
            }
        }
        if shift >= 0 {
            for _ in 0..shift {
                units = units.checked_mul(10).ok_or_else(err)?;
                if units > i64::MAX as i128 {
                    return Err(err());
                }
            }
        } else {
            for _ in 0..(-shift) {
                if units % 10 != 0 {
                    return Err(err());
                }
                units /= 10;
            }
        }
        if units > i64::MAX as i128 {
            return Err(err());
        }
        let units = units as i64;
        Ok(Cost(if neg { -units } else { units }))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / COST_SCALE as u64;
        let frac = abs % COST_SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let s = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

impl FromStr for Cost {
    type Err = ParseCostError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Cost::parse(s)
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost(self.0 - rhs.0)
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Cost> for Cost {
    fn sum<I: Iterator<Item = &'a Cost>>(iter: I) -> Cost {
        iter.copied().sum()
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_integral() {
            serializer.serialize_i64(self.0 / COST_SCALE)
        } else {
            // shortest round-trip float repr of a <=6-decimal value parses back exactly
            serializer.serialize_f64(self.as_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CostVisitor;
        impl Visitor<'_> for CostVisitor {
            type Value = Cost;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal cost")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cost, E> {
                v.checked_mul(COST_SCALE)
                    .map(Cost)
                    .ok_or_else(|| E::custom("cost out of range"))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cost, E> {
                i64::try_from(v)
                    .map_err(|_| E::custom("cost out of range"))
                    .and_then(|v| self.visit_i64(v))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cost, E> {
                Cost::parse(&format!("{v}")).map_err(E::custom)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cost, E> {
                Cost::parse(v).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(CostVisitor)
    }
}
