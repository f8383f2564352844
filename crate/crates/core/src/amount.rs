//! Fixed-point non-negative quantities.
//!
//! Aggregated weights and values are summed as integers in units of 1e-9 so
//! that reduction is exactly associative and commutative: any sharding or
//! merge order produces bit-identical totals.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(u128);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed fixed-point amount {0:?}")]
pub struct AmountParseError(String);

impl Amount {
    pub const DECIMALS: u32 = 9;
    pub const SCALE: u128 = 1_000_000_000;
    pub const ZERO: Amount = Amount(0);

    /// Rounds to the nearest unit. Negative and NaN inputs map to zero.
    pub fn from_f64(v: f64) -> Self {
        if v.is_nan() || v <= 0.0 {
            return Self::ZERO;
        }
        Self((v * Self::SCALE as f64).round() as u128)
    }

    pub fn from_units(units: u128) -> Self {
        Self(units)
    }

    pub fn units(self) -> u128 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        (self.0 / Self::SCALE) as f64 + (self.0 % Self::SCALE) as f64 / Self::SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Amount {
    type Output = Amount;

    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0 + rhs.0)
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        self.0 += rhs.0;
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, Add::add)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / Self::SCALE, self.0 % Self::SCALE)
    }
}

impl FromStr for Amount {
    type Err = AmountParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AmountParseError(s.to_string());
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if frac.len() > Self::DECIMALS as usize || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let int: u128 = int.parse().map_err(|_| err())?;
        let mut frac_units: u128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
        frac_units *= 10u128.pow(Self::DECIMALS - frac.len() as u32);
        int.checked_mul(Self::SCALE)
            .and_then(|v| v.checked_add(frac_units))
            .map(Amount)
            .ok_or_else(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(Amount::from_f64(10.0).to_string(), "10.000000000");
        assert_eq!(Amount::from_f64(0.25).to_string(), "0.250000000");
        assert_eq!(Amount::from_f64(-3.0), Amount::ZERO);
        assert_eq!(Amount::from_f64(f64::NAN), Amount::ZERO);
        assert_eq!("1.5".parse::<Amount>().unwrap(), Amount::from_f64(1.5));
        assert!("1.".parse::<Amount>().is_ok());
        assert!("-1".parse::<Amount>().is_err());
        assert!(".5".parse::<Amount>().is_err());
        assert!("1.0000000001".parse::<Amount>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn text_round_trip(units in 0u128..u64::MAX as u128 * 1000) {
            let a = Amount::from_units(units);
            proptest::prop_assert_eq!(a.to_string().parse::<Amount>().unwrap(), a);
        }

        #[test]
        fn f64_round_trip_error(v in 0.0f64..1e9) {
            let a = Amount::from_f64(v);
            proptest::prop_assert!((a.to_f64() - v).abs() <= 0.5e-9 + v * 1e-15);
        }
    }
}
