//! Intermediate contribution files for splitting a job across machines.
//!
//! Tab-separated, for example:
//!
//! ```text
//! #geotext-shard 1
//! #fingerprint 9f2c...
//! #granularity year
//! #records 120 117
//! #skipped unresolvable_geo 3
//! V 29.7174 -95.4018 2008 1250.000000000 4
//! P 29.7174 -95.4018 2008 magnetosphere 310.500000000
//! ```
//!
//! `V` rows carry value shares and document counts, `P` rows phrase
//! weights. Rows are pre-reduced and sorted.

use std::io::Write;

use thiserror::Error;

use super::{Aggregate, Contribution, InputRecord, SiteKey, SkipReason};
use crate::amount::Amount;
use crate::timebin::{Granularity, TimeBin};

const MAGIC: &str = "#geotext-shard";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("{source_name}:{line}: {reason}")]
    Format {
        source_name: String,
        line: usize,
        reason: String,
    },
    #[error("{source_name} was produced with fingerprint {found}, expected {expected}")]
    Fingerprint {
        source_name: String,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShardFile {
    pub fingerprint: String,
    pub granularity: Granularity,
    pub aggregate: Aggregate,
}

/// Records assigned to shard `index` of `count` (round robin).
pub fn select_shard(records: &[InputRecord], index: usize, count: usize) -> Vec<InputRecord> {
    records.iter().skip(index).step_by(count.max(1)).cloned().collect()
}

pub fn write_shard(agg: &Aggregate, fingerprint: &str, granularity: Granularity, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}\t{VERSION}")?;
    writeln!(out, "#fingerprint\t{fingerprint}")?;
    writeln!(out, "#granularity\t{granularity}")?;
    writeln!(out, "#records\t{}\t{}", agg.stats.records_read, agg.stats.records_kept)?;
    for (reason, n) in &agg.stats.skipped {
        writeln!(out, "#skipped\t{}\t{n}", reason.as_str())?;
    }
    for c in agg.contributions() {
        match c {
            Contribution::Value { site, bin, value, count } => {
                writeln!(out, "V\t{}\t{}\t{}\t{value}\t{count}", site.lat_str(), site.lon_str(), bin.label())?
            }
            Contribution::Phrase { site, bin, phrase, weight } => {
                writeln!(out, "P\t{}\t{}\t{}\t{phrase}\t{weight}", site.lat_str(), site.lon_str(), bin.label())?
            }
        }
    }
    Ok(())
}

pub fn read_shard(text: &str, source_name: &str) -> Result<ShardFile, ShardError> {
    let err = |line: usize, reason: String| ShardError::Format {
        source_name: source_name.to_string(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == format!("{MAGIC}\t{VERSION}") => {}
        _ => return Err(err(1, format!("not a version {VERSION} shard file"))),
    }
    let mut fingerprint = None;
    let mut granularity = None;
    let mut agg = Aggregate::default();
    for (n, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        match f.as_slice() {
            ["#fingerprint", fp] => fingerprint = Some(fp.to_string()),
            ["#granularity", g] => granularity = Some(g.parse::<Granularity>().map_err(|e| err(n, e.to_string()))?),
            ["#records", read, kept] => {
                agg.stats.records_read = read.parse().map_err(|_| err(n, "bad record count".into()))?;
                agg.stats.records_kept = kept.parse().map_err(|_| err(n, "bad record count".into()))?;
            }
            ["#skipped", reason, count] => {
                let r = SkipReason::parse(reason).ok_or_else(|| err(n, format!("unknown skip reason {reason:?}")))?;
                let c: u64 = count.parse().map_err(|_| err(n, "bad skip count".into()))?;
                *agg.stats.skipped.entry(r).or_insert(0) += c;
            }
            [kind @ ("V" | "P"), lat, lon, label, a, b] => {
                let g = granularity.ok_or_else(|| err(n, "row before #granularity".into()))?;
                let site = SiteKey::parse(lat, lon).ok_or_else(|| err(n, "bad coordinates".into()))?;
                let bin = TimeBin::parse_label(label, g).map_err(|e| err(n, e.to_string()))?;
                if *kind == "V" {
                    let value: Amount = a.parse().map_err(|e| err(n, format!("{e}")))?;
                    let count: u64 = b.parse().map_err(|_| err(n, "bad count".into()))?;
                    agg.push(Contribution::Value { site, bin, value, count });
                } else {
                    let weight: Amount = b.parse().map_err(|e| err(n, format!("{e}")))?;
                    agg.push(Contribution::Phrase {
                        site,
                        bin,
                        phrase: a.to_string(),
                        weight,
                    });
                }
            }
            [""] => {}
            _ => return Err(err(n, "unrecognized row".into())),
        }
    }
    Ok(ShardFile {
        fingerprint: fingerprint.ok_or_else(|| err(1, "missing #fingerprint".into()))?,
        granularity: granularity.ok_or_else(|| err(1, "missing #granularity".into()))?,
        aggregate: agg,
    })
}

/// Reduces shard files produced under `fingerprint`.
pub fn merge_shards(
    shards: impl IntoIterator<Item = (String, ShardFile)>,
    fingerprint: &str,
) -> Result<Aggregate, ShardError> {
    let mut total = Aggregate::default();
    for (name, shard) in shards {
        if shard.fingerprint != fingerprint {
            return Err(ShardError::Fingerprint {
                source_name: name,
                expected: fingerprint.to_string(),
                found: shard.fingerprint,
            });
        }
        total.merge(shard.aggregate);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{reduce, Record, TimeField};

    fn sample() -> Aggregate {
        let site = SiteKey::from_degrees(29.7174, -95.4018);
        let bin = TimeBin::parse_label("2008", Granularity::Year).unwrap();
        let mut agg = reduce([
            Contribution::Value {
                site,
                bin,
                value: Amount::from_f64(12.5),
                count: 2,
            },
            Contribution::Phrase {
                site,
                bin,
                phrase: "k-12 outreach".into(),
                weight: Amount::from_f64(3.25),
            },
        ]);
        agg.stats.records_read = 3;
        agg.stats.records_kept = 2;
        agg.stats.skipped.insert(SkipReason::OffTopic, 1);
        agg
    }

    #[test]
    fn round_trip() {
        let agg = sample();
        let mut buf = Vec::new();
        write_shard(&agg, "fp1", Granularity::Year, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("P\t29.7174\t-95.4018\t2008\tk-12 outreach\t3.250000000\n"));
        let back = read_shard(&text, "s0").unwrap();
        assert_eq!(back.fingerprint, "fp1");
        assert_eq!(back.aggregate, agg);
    }

    #[test]
    fn merge_checks_fingerprint() {
        let a = ShardFile {
            fingerprint: "x".into(),
            granularity: Granularity::Year,
            aggregate: sample(),
        };
        let merged = merge_shards([("a".to_string(), a.clone()), ("b".to_string(), a.clone())], "x").unwrap();
        assert_eq!(merged.stats.records_read, 6);
        assert!(matches!(merge_shards([("a".to_string(), a)], "y"), Err(ShardError::Fingerprint { .. })));
    }

    #[test]
    fn bad_rows_are_located() {
        let text = "#geotext-shard\t1\n#fingerprint\tx\n#granularity\tyear\nQ\t1\n";
        match read_shard(text, "f") {
            Err(ShardError::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(read_shard("hello", "f").is_err());
    }

    #[test]
    fn round_robin_selection() {
        let recs: Vec<InputRecord> = (0..5)
            .map(|i| {
                Ok(Record {
                    text: i.to_string(),
                    geo: String::new(),
                    t0: TimeField::Epoch(0),
                    t1: None,
                    value: None,
                })
            })
            .collect();
        let texts = |v: Vec<InputRecord>| v.into_iter().map(|r| r.unwrap().text).collect::<Vec<_>>();
        assert_eq!(texts(select_shard(&recs, 0, 2)), ["0", "2", "4"]);
        assert_eq!(texts(select_shard(&recs, 1, 2)), ["1", "3"]);
    }
}
