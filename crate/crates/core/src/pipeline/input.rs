//! Input records from JSON lines or CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("CSV input: {0}")]
    Csv(#[from] csv::Error),
}

/// A timestamp field: ISO-8601 text or integer epoch seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeField {
    Epoch(i64),
    Text(String),
}

impl TimeField {
    pub fn to_epoch(&self) -> Result<i64, crate::timebin::TimeError> {
        match self {
            TimeField::Epoch(s) => Ok(*s),
            TimeField::Text(t) => crate::timebin::parse_timestamp(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub text: String,
    pub geo: String,
    pub t0: TimeField,
    /// Absent for a point-in-time record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<TimeField>,
    /// Defaults to 1 so unvalued records count equally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// A parsed record, or why the line could not be parsed.
pub type InputRecord = Result<Record, String>;

pub fn parse_jsonl(reader: impl BufRead) -> Result<Vec<InputRecord>, std::io::Error> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<Record>(&line).map_err(|e| format!("line {}: {e}", i + 1)));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct CsvRow {
    text: String,
    geo: String,
    t0: String,
    #[serde(default)]
    t1: Option<String>,
    #[serde(default)]
    value: Option<String>,
}

fn time_field(s: &str) -> TimeField {
    match s.trim().parse::<i64>() {
        Ok(secs) => TimeField::Epoch(secs),
        Err(_) => TimeField::Text(s.trim().to_string()),
    }
}

pub fn parse_csv(reader: impl Read) -> Result<Vec<InputRecord>, InputError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let rec = match row {
            Ok(row) => {
                let value = match row.value.as_deref().map(str::trim).filter(|v| !v.is_empty()) {
                    None => Ok(None),
                    Some(v) => v.parse::<f64>().map(Some).map_err(|_| format!("row {}: bad value {v:?}", i + 2)),
                };
                value.map(|value| Record {
                    text: row.text,
                    geo: row.geo,
                    t0: time_field(&row.t0),
                    t1: row.t1.as_deref().filter(|t| !t.trim().is_empty()).map(time_field),
                    value,
                })
            }
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => Err(format!("row {}: {e}", i + 2)),
        };
        out.push(rec);
    }
    Ok(out)
}

/// Reads `.csv` files as CSV and anything else as JSON lines.
pub fn read_input(path: &Path) -> Result<Vec<InputRecord>, InputError> {
    let io_err = |source| InputError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv(BufReader::new(file))
    } else {
        parse_jsonl(BufReader::new(file)).map_err(io_err)
    }
}

/// Writes records as JSON lines.
pub fn write_jsonl(records: &[Record], mut out: impl std::io::Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
