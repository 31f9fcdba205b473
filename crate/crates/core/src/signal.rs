//! Exact rectangular detection pulses.
//!
//! Time is kept as signed integer microseconds so that the half-level at a
//! window edge is decided by integer comparison, never by floating point.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MICROS_PER_SEC: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("pulse duration must be positive, got {0} us")]
    NonPositiveDuration(i64),
    #[error("pulse duration must be an even number of microseconds, got {0} us")]
    OddDuration(i64),
    #[error("window end {end} must be after start {start}")]
    EmptyWindow { start: Time, end: Time },
    #[error("invalid time `{0}`: {1}")]
    InvalidTime(String, &'static str),
}

/// A point in time (or a time span) in integer microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_micros(us: i64) -> Self {
        Time(us)
    }

    pub const fn from_secs(s: i64) -> Self {
        Time(s * MICROS_PER_SEC)
    }

    /// Converts floating seconds to microseconds, rounding half away from zero.
    pub fn from_secs_f64(s: f64) -> Result<Self, SignalError> {
        let us = (s * MICROS_PER_SEC as f64).round();
        if !us.is_finite() || us.abs() >= i64::MAX as f64 {
            return Err(SignalError::InvalidTime(s.to_string(), "out of range"));
        }
        Ok(Time(us as i64))
    }

    /// Parses decimal seconds (`"20"`, `"-0.5"`, `"1.25e2"`) exactly.
    ///
    /// Anything finer than one microsecond is rejected instead of rounded.
    pub fn parse_secs(text: &str) -> Result<Self, SignalError> {
        parse_decimal_micros(text.trim()).map(Time)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn abs(self) -> Time {
        Time(self.0.abs())
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl Neg for Time {
    type Output = Time;
    fn neg(self) -> Time {
        Time(-self.0)
    }
}

/// Exact decimal seconds with trailing zeros trimmed, e.g. `20`, `100.000001`.
impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / MICROS_PER_SEC as u64;
        let frac = abs % MICROS_PER_SEC as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Time {
    type Err = SignalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Time::parse_secs(s)
    }
}

/// Serialized as a JSON number of seconds.
impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_secs_f64())
    }
}

/// Accepts a JSON number of seconds with at most six fractional digits.
///
/// The shortest round-trip rendering of the parsed double is what gets
/// checked, which equals the written literal for anything with 15 or fewer
/// significant digits.
impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(deserializer)?;
        if !secs.is_finite() {
            return Err(serde::de::Error::custom("time must be finite"));
        }
        Time::parse_secs(&format!("{secs}")).map_err(serde::de::Error::custom)
    }
}

fn parse_decimal_micros(text: &str) -> Result<i64, SignalError> {
    let bad = |why| SignalError::InvalidTime(text.to_string(), why);
    let (negative, rest) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match rest.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = rest[pos + 1..]
                .parse()
                .map_err(|_| bad("malformed exponent"))?;
            (&rest[..pos], exp)
        }
        None => (rest, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad("not a decimal number"));
    }
    // value = digits * 10^(exponent - frac_len); we want value * 10^6.
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let mut scale = exponent as i64 - frac_part.len() as i64 + 6;
    let mut digits = digits.to_string();
    while scale < 0 {
        match digits.pop() {
            Some('0') => scale += 1,
            Some(_) => return Err(bad("finer than one microsecond")),
            None => {
                scale = 0;
            }
        }
    }
    if digits.is_empty() {
        return Ok(0);
    }
    if digits.len() as i64 + scale > 19 {
        return Err(bad("out of range"));
    }
    let mut value: i128 = digits.parse().map_err(|_| bad("out of range"))?;
    for _ in 0..scale {
        value *= 10;
    }
    if negative {
        value = -value;
    }
    i64::try_from(value).map_err(|_| bad("out of range"))
}

/// One of the three values the rectangular function can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PulseLevel {
    Zero,
    Half,
    One,
}

impl PulseLevel {
    /// The level counted in halves: 0, 1 or 2.
    pub const fn halves(self) -> u32 {
        match self {
            PulseLevel::Zero => 0,
            PulseLevel::Half => 1,
            PulseLevel::One => 2,
        }
    }

    pub const fn as_f64(self) -> f64 {
        match self {
            PulseLevel::Zero => 0.0,
            PulseLevel::Half => 0.5,
            PulseLevel::One => 1.0,
        }
    }
}

/// `rect(t / width)`: 1 strictly inside `|t| < width/2`, 1/2 on the edge,
/// 0 outside.
pub fn rect(t: Time, width: Time) -> Result<PulseLevel, SignalError> {
    if width.0 <= 0 {
        return Err(SignalError::NonPositiveDuration(width.0));
    }
    Ok(rect_unchecked(t, width))
}

fn rect_unchecked(t: Time, width: Time) -> PulseLevel {
    let twice = 2 * (t.0 as i128).abs();
    let width = width.0 as i128;
    match twice.cmp(&width) {
        std::cmp::Ordering::Less => PulseLevel::One,
        std::cmp::Ordering::Equal => PulseLevel::Half,
        std::cmp::Ordering::Greater => PulseLevel::Zero,
    }
}

/// A shifted rectangular detection window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RectPulse {
    center: Time,
    duration: Time,
}

impl RectPulse {
    pub fn new(center: Time, duration: Time) -> Result<Self, SignalError> {
        if duration.0 <= 0 {
            return Err(SignalError::NonPositiveDuration(duration.0));
        }
        if duration.0 % 2 != 0 {
            return Err(SignalError::OddDuration(duration.0));
        }
        Ok(RectPulse { center, duration })
    }

    /// Builds the pulse covering the closed window `[start, end]`.
    pub fn from_window(start: Time, end: Time) -> Result<Self, SignalError> {
        if end <= start {
            return Err(SignalError::EmptyWindow { start, end });
        }
        let duration = end - start;
        if duration.0 % 2 != 0 {
            return Err(SignalError::OddDuration(duration.0));
        }
        Ok(RectPulse {
            center: start + Time(duration.0 / 2),
            duration,
        })
    }

    pub fn center(&self) -> Time {
        self.center
    }

    pub fn duration(&self) -> Time {
        self.duration
    }

    pub fn half_duration(&self) -> Time {
        Time(self.duration.0 / 2)
    }

    pub fn start(&self) -> Time {
        self.center - self.half_duration()
    }

    pub fn end(&self) -> Time {
        self.center + self.half_duration()
    }

    pub fn shifted(&self, by: Time) -> RectPulse {
        RectPulse {
            center: self.center + by,
            duration: self.duration,
        }
    }
}

pub fn pulse_value(p: &RectPulse, t: Time) -> PulseLevel {
    rect_unchecked(t - p.center, p.duration)
}

/// Level of the pulse on the open interval `(a, b)`, `a < b`, given that no
/// pulse edge lies strictly inside it.
pub(crate) fn pulse_value_on_gap(p: &RectPulse, a: Time, b: Time) -> PulseLevel {
    if p.start() <= a && b <= p.end() {
        PulseLevel::One
    } else {
        PulseLevel::Zero
    }
}

pub fn pulse_support(p: &RectPulse) -> (Time, Time) {
    (p.start(), p.end())
}

pub fn pulse_breakpoints(p: &RectPulse) -> Vec<Time> {
    vec![p.start(), p.end()]
}
