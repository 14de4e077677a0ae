//! Exact virtual time.
//!
//! Time is stored as an integer count of milli-units, so durations such as
//! `2.0` or `0.5` and the `0.001` separation between interfering events are
//! all represented without rounding. One time unit is treated as one second
//! of virtual time, which makes one tick equal to one virtual millisecond.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Ticks per time unit.
pub const TICKS_PER_UNIT: i64 = 1000;

/// Separation between interfering snap events.
pub const EPSILON: Time = Time(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_ticks(ticks: i64) -> Self {
        Time(ticks)
    }

    pub const fn from_units(units: i64) -> Self {
        Time(units * TICKS_PER_UNIT)
    }

    pub const fn from_millis(ms: i64) -> Self {
        Time(ms)
    }

    pub const fn ticks(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_UNIT as f64
    }

    /// Nearest representable time, `None` for non-finite input.
    pub fn from_f64(units: f64) -> Option<Self> {
        if !units.is_finite() {
            return None;
        }
        Some(Time((units * TICKS_PER_UNIT as f64).round() as i64))
    }

    pub fn abs_diff(self, other: Time) -> Time {
        Time((self.0 - other.0).abs())
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let unit = TICKS_PER_UNIT as u64;
        write!(f, "{sign}{}.{:03}", abs / unit, abs % unit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a time value with at most 3 decimals")]
pub struct ParseTimeError(pub String);

impl FromStr for Time {
    type Err = ParseTimeError;

    /// Parses decimal literals like `2`, `2.5`, `0.001`. More than three
    /// fractional digits is an error unless the extra digits are zeros.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let (kept, extra) = frac_part.split_at(frac_part.len().min(3));
        if extra.chars().any(|c| c != '0') {
            return Err(err());
        }
        let int: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let mut frac: i64 = if kept.is_empty() { 0 } else { kept.parse().map_err(|_| err())? };
        for _ in kept.len()..3 {
            frac *= 10;
        }
        let ticks = int
            .checked_mul(TICKS_PER_UNIT)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Time(if neg { -ticks } else { ticks }))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        Time::from_f64(v).ok_or_else(|| serde::de::Error::custom("non-finite time"))
    }
}
