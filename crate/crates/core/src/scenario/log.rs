//! Detection logs as reported by vision units.
//!
//! One record per line, either CSV
//!
//! ```text
//! unit_id,class_id,start_us,end_us
//! 1,1,20000000,100000000
//! ```
//!
//! or a JSON object with the same four keys. Blank lines and lines starting
//! with `#` are skipped, as is a CSV header line naming the columns.

use serde::Deserialize;
use thiserror::Error;

use crate::composition::ClassId;
use crate::signal::{RectPulse, SignalError, Time};
use crate::unit::UnitId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionRecord {
    pub unit: UnitId,
    pub class: ClassId,
    pub start: Time,
    pub end: Time,
}

impl DetectionRecord {
    pub fn pulse(&self) -> Result<RectPulse, SignalError> {
        RectPulse::from_window(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LogLineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LogIngest {
    pub records: Vec<DetectionRecord>,
    /// Lines skipped in lenient mode.
    pub rejected: Vec<LogLineError>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    unit_id: u32,
    class_id: u32,
    start_us: i64,
    end_us: i64,
}

fn parse_line(line: &str) -> Result<DetectionRecord, String> {
    let (unit, class, start, end) = if line.starts_with('{') {
        let r: JsonRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        (r.unit_id, r.class_id, r.start_us, r.end_us)
    } else {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(format!("expected 4 comma-separated fields, found {}", fields.len()));
        }
        let int = |i: usize, name: &str| -> Result<i64, String> {
            fields[i]
                .parse::<i64>()
                .map_err(|_| format!("{name} `{}` is not an integer", fields[i]))
        };
        let id = |i: usize, name: &str| -> Result<u32, String> {
            fields[i]
                .parse::<u32>()
                .map_err(|_| format!("{name} `{}` is not a positive integer", fields[i]))
        };
        (id(0, "unit_id")?, id(1, "class_id")?, int(2, "start_us")?, int(3, "end_us")?)
    };
    let record = DetectionRecord {
        unit: UnitId(unit),
        class: ClassId(class),
        start: Time::from_micros(start),
        end: Time::from_micros(end),
    };
    record.pulse().map_err(|e| e.to_string())?;
    Ok(record)
}

fn is_header(line: &str) -> bool {
    line.replace(' ', "") == "unit_id,class_id,start_us,end_us"
}

/// Parses a detection log. In strict mode the first bad line is returned as
/// the error; otherwise bad lines are collected in `rejected`.
pub fn ingest_detection_log(text: &str, strict: bool) -> Result<LogIngest, LogLineError> {
    let mut out = LogIngest::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || is_header(line) {
            continue;
        }
        match parse_line(line) {
            Ok(r) => out.records.push(r),
            Err(message) => {
                let err = LogLineError { line: idx + 1, message };
                if strict {
                    return Err(err);
                }
                out.rejected.push(err);
            }
        }
    }
    Ok(out)
}
