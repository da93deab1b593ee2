use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const SCALE: i64 = 1_000_000;
const MAX_FRACTION_DIGITS: usize = 6;

/// A UEFA club coefficient held as an exact decimal with six fractional
/// digits, so seeding comparisons never depend on binary rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coefficient(i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseCoefficientError {
    #[error("empty coefficient")]
    Empty,
    #[error("invalid decimal `{0}`")]
    Invalid(String),
    #[error("`{0}` has more than {MAX_FRACTION_DIGITS} fractional digits")]
    TooPrecise(String),
    #[error("`{0}` is out of range")]
    Overflow(String),
}

impl Coefficient {
    pub const ZERO: Coefficient = Coefficient(0);

    pub fn from_micros(micros: i64) -> Self {
        Coefficient(micros)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

impl FromStr for Coefficient {
    type Err = ParseCoefficientError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(ParseCoefficientError::Empty);
        }
        let invalid = || ParseCoefficientError::Invalid(raw.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        if frac_part.len() > MAX_FRACTION_DIGITS {
            return Err(ParseCoefficientError::TooPrecise(raw.to_string()));
        }
        let overflow = || ParseCoefficientError::Overflow(raw.to_string());
        let int_value: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| overflow())? };
        let mut frac_value: i64 = 0;
        for (i, digit) in frac_part.bytes().enumerate() {
            frac_value += i64::from(digit - b'0') * 10_i64.pow((MAX_FRACTION_DIGITS - 1 - i) as u32);
        }
        let magnitude = int_value.checked_mul(SCALE).and_then(|v| v.checked_add(frac_value)).ok_or_else(overflow)?;
        Ok(Coefficient(if negative { -magnitude } else { magnitude }))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let magnitude = self.0.unsigned_abs();
        let int_part = magnitude / SCALE as u64;
        let frac_part = magnitude % SCALE as u64;
        if frac_part == 0 {
            return write!(f, "{sign}{int_part}");
        }
        let digits = format!("{frac_part:06}");
        write!(f, "{sign}{int_part}.{}", digits.trim_end_matches('0'))
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_table_values_exactly() {
        assert_eq!("87.755".parse::<Coefficient>().unwrap().micros(), 87_755_000);
        assert_eq!("57.112".parse::<Coefficient>().unwrap().micros(), 57_112_000);
        assert_eq!("0".parse::<Coefficient>().unwrap(), Coefficient::ZERO);
        assert_eq!(".5".parse::<Coefficient>().unwrap().micros(), 500_000);
        assert_eq!("-1.25".parse::<Coefficient>().unwrap().micros(), -1_250_000);
    }

    #[test]
    fn display_trims_trailing_zeros() {
        assert_eq!("2.90".parse::<Coefficient>().unwrap().to_string(), "2.9");
        assert_eq!("27".parse::<Coefficient>().unwrap().to_string(), "27");
        assert_eq!("0.349".parse::<Coefficient>().unwrap().to_string(), "0.349");
    }

    #[test]
    fn rejects_garbage() {
        assert!("".parse::<Coefficient>().is_err());
        assert!("1.2.3".parse::<Coefficient>().is_err());
        assert!("abc".parse::<Coefficient>().is_err());
        assert!(".".parse::<Coefficient>().is_err());
        assert!(matches!("1.1234567".parse::<Coefficient>(), Err(ParseCoefficientError::TooPrecise(_))));
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(micros in -10_000_000_000i64..10_000_000_000i64) {
            let c = Coefficient::from_micros(micros);
            prop_assert_eq!(c.to_string().parse::<Coefficient>().unwrap(), c);
        }
    }
}
