//! Calendar bins (UTC) and proration of values over time ranges.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TimeError {
    #[error("unrecognized timestamp {0:?}")]
    BadTimestamp(String),
    #[error("time range ends before it starts")]
    Reversed,
    #[error("unknown granularity {0:?}")]
    BadGranularity(String),
    #[error("malformed bin label {0:?}")]
    BadLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Hour,
    Day,
    Week,
    Month,
    Year,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Hour => "hour",
            Granularity::Day => "day",
            Granularity::Week => "week",
            Granularity::Month => "month",
            Granularity::Year => "year",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hour" => Ok(Granularity::Hour),
            "day" => Ok(Granularity::Day),
            "week" => Ok(Granularity::Week),
            "month" => Ok(Granularity::Month),
            "year" => Ok(Granularity::Year),
            _ => Err(TimeError::BadGranularity(s.to_string())),
        }
    }
}

/// Closed-open interval `[start, end)` in epoch seconds. `start == end` is
/// an instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    start: i64,
    end: i64,
}

impl TimeRange {
    pub fn new(start: i64, end: i64) -> Result<Self, TimeError> {
        if end < start {
            return Err(TimeError::Reversed);
        }
        Ok(Self { start, end })
    }

    pub fn instant(t: i64) -> Self {
        Self { start: t, end: t }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn is_instant(&self) -> bool {
        self.start == self.end
    }
}

/// A calendar-aligned bin identified by its UTC start instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeBin {
    granularity: Granularity,
    start: i64,
}

fn utc(t: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(t, 0).single().expect("timestamp in chrono range")
}

fn ymd(y: i32, m: u32, d: u32) -> i64 {
    NaiveDate::from_ymd_opt(y, m, d)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_utc()
        .timestamp()
}

impl TimeBin {
    /// The bin of `granularity` containing instant `t`.
    pub fn containing(t: i64, granularity: Granularity) -> Self {
        let dt = utc(t);
        let start = match granularity {
            Granularity::Hour => t - t.rem_euclid(3600),
            Granularity::Day => t - t.rem_euclid(86_400),
            Granularity::Week => {
                let day = t - t.rem_euclid(86_400);
                day - i64::from(dt.weekday().num_days_from_monday()) * 86_400
            }
            Granularity::Month => ymd(dt.year(), dt.month(), 1),
            Granularity::Year => ymd(dt.year(), 1, 1),
        };
        Self { granularity, start }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Exclusive end, which is the start of the following bin.
    pub fn end(&self) -> i64 {
        let dt = utc(self.start);
        match self.granularity {
            Granularity::Hour => self.start + 3600,
            Granularity::Day => self.start + 86_400,
            Granularity::Week => self.start + 7 * 86_400,
            Granularity::Month => {
                let (y, m) = if dt.month() == 12 { (dt.year() + 1, 1) } else { (dt.year(), dt.month() + 1) };
                ymd(y, m, 1)
            }
            Granularity::Year => ymd(dt.year() + 1, 1, 1),
        }
    }

    pub fn next(&self) -> Self {
        Self {
            granularity: self.granularity,
            start: self.end(),
        }
    }

    pub fn prev(&self) -> Self {
        Self::containing(self.start - 1, self.granularity)
    }

    /// Canonical label: `2008`, `2008-03`, `2008-W10` (ISO week),
    /// `2008-03-01`, `2008-03-01T13`.
    pub fn label(&self) -> String {
        let dt = utc(self.start);
        match self.granularity {
            Granularity::Year => format!("{:04}", dt.year()),
            Granularity::Month => format!("{:04}-{:02}", dt.year(), dt.month()),
            Granularity::Week => {
                let w = dt.iso_week();
                format!("{:04}-W{:02}", w.year(), w.week())
            }
            Granularity::Day => format!("{:04}-{:02}-{:02}", dt.year(), dt.month(), dt.day()),
            Granularity::Hour => format!("{:04}-{:02}-{:02}T{:02}", dt.year(), dt.month(), dt.day(), dt.hour()),
        }
    }

    pub fn parse_label(label: &str, granularity: Granularity) -> Result<Self, TimeError> {
        let bad = || TimeError::BadLabel(label.to_string());
        let start = match granularity {
            Granularity::Year => {
                let y: i32 = label.parse().map_err(|_| bad())?;
                NaiveDate::from_ymd_opt(y, 1, 1).ok_or_else(bad)?;
                ymd(y, 1, 1)
            }
            Granularity::Month => {
                let d = NaiveDate::parse_from_str(&format!("{label}-01"), "%Y-%m-%d").map_err(|_| bad())?;
                ymd(d.year(), d.month(), 1)
            }
            Granularity::Week => {
                let (y, w) = label.split_once("-W").ok_or_else(bad)?;
                let y: i32 = y.parse().map_err(|_| bad())?;
                let w: u32 = w.parse().map_err(|_| bad())?;
                let d = NaiveDate::from_isoywd_opt(y, w, Weekday::Mon).ok_or_else(bad)?;
                ymd(d.year(), d.month(), d.day())
            }
            Granularity::Day => {
                let d = NaiveDate::parse_from_str(label, "%Y-%m-%d").map_err(|_| bad())?;
                ymd(d.year(), d.month(), d.day())
            }
            Granularity::Hour => {
                let dt = NaiveDateTime::parse_from_str(&format!("{label}:00:00"), "%Y-%m-%dT%H:%M:%S")
                    .map_err(|_| bad())?;
                dt.and_utc().timestamp()
            }
        };
        let bin = Self { granularity, start };
        if bin.label() != label {
            return Err(bad());
        }
        Ok(bin)
    }
}

impl fmt::Display for TimeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses an ISO-8601 timestamp (`2013-03-15T12:00:00Z`, `2013-03-15T12:00:00`,
/// `2013-03-15`) or integer epoch seconds.
pub fn parse_timestamp(s: &str) -> Result<i64, TimeError> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(ymd(d.year(), d.month(), d.day()));
    }
    Err(TimeError::BadTimestamp(s.to_string()))
}

/// Distributes `value` over the bins overlapped by `range`, proportionally to
/// overlap in seconds. An instant puts the whole value in its bin.
pub fn prorate(range: TimeRange, value: f64, granularity: Granularity) -> Vec<(TimeBin, f64)> {
    if range.is_instant() {
        return vec![(TimeBin::containing(range.start, granularity), value)];
    }
    let span = (range.end - range.start) as f64;
    let mut out = Vec::new();
    let mut bin = TimeBin::containing(range.start, granularity);
    while bin.start < range.end {
        let overlap = range.end.min(bin.end()) - range.start.max(bin.start);
        if overlap > 0 {
            out.push((bin, value * (overlap as f64 / span)));
        }
        bin = bin.next();
    }
    out
}

/// Seconds in `days` days, for building ranges in tests and generators.
pub fn days(n: i64) -> i64 {
    Duration::days(n).num_seconds()
}
