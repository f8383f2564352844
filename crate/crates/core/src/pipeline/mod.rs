//! Map/reduce aggregation of records into per-site, per-bin phrase weights.
//!
//! Mapping is a pure function of one record (plus the shared corpus, geo
//! tables and config), and reduction sums fixed-point amounts, so the final
//! dataset is identical for any sharding, worker count or merge order, and
//! incremental appends equal full reruns.

pub mod config;
pub mod input;
pub mod shard;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::corpus::ReferenceCorpus;
use crate::geocode::Geocoder;
use crate::keyphrase::{extract, Keyphrase};
use crate::store::{Dataset, Manifest, SiteSummary, SiteTriple, FORMAT_VERSION};
use crate::textprep::{is_english, matches_topic, prepare};
use crate::timebin::{prorate, TimeBin, TimeRange};

pub use config::{ConfigError, ConfigFile, CorpusSource, Filters, PipelineConfig, PresetName};
pub use input::{read_input, InputRecord, Record, TimeField};

/// Coordinates rounded half away from zero to 1e-4 degrees, stored as
/// integer units. Ordering is `(lat, lon)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteKey {
    lat: i32,
    lon: i32,
}

/// Formats `units × 10^-decimals` exactly.
pub fn format_fixed(units: i64, decimals: u32) -> String {
    let scale = 10i64.pow(decimals);
    let sign = if units < 0 { "-" } else { "" };
    let abs = units.unsigned_abs();
    if decimals == 0 {
        return format!("{sign}{abs}");
    }
    format!(
        "{sign}{}.{:0width$}",
        abs / scale as u64,
        abs % scale as u64,
        width = decimals as usize
    )
}

impl SiteKey {
    pub const DECIMALS: u32 = 4;
    pub const UNITS_PER_DEGREE: f64 = 10_000.0;

    pub fn from_degrees(lat: f64, lon: f64) -> Self {
        Self {
            lat: (lat * Self::UNITS_PER_DEGREE).round() as i32,
            lon: (lon * Self::UNITS_PER_DEGREE).round() as i32,
        }
    }

    pub fn from_units(lat: i32, lon: i32) -> Self {
        Self { lat, lon }
    }

    pub fn lat_units(&self) -> i32 {
        self.lat
    }

    pub fn lon_units(&self) -> i32 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        f64::from(self.lat) / Self::UNITS_PER_DEGREE
    }

    pub fn lon(&self) -> f64 {
        f64::from(self.lon) / Self::UNITS_PER_DEGREE
    }

    /// Parses decimal degree strings; `None` if out of range.
    pub fn parse(lat: &str, lon: &str) -> Option<Self> {
        let lat: f64 = lat.trim().parse().ok()?;
        let lon: f64 = lon.trim().parse().ok()?;
        if !(lat.is_finite() && lon.is_finite() && lat.abs() <= 90.0 && lon.abs() <= 180.0) {
            return None;
        }
        Some(Self::from_degrees(lat, lon))
    }

    pub fn lat_str(&self) -> String {
        format_fixed(self.lat.into(), Self::DECIMALS)
    }

    pub fn lon_str(&self) -> String {
        format_fixed(self.lon.into(), Self::DECIMALS)
    }
}

impl fmt::Display for SiteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lat_str(), self.lon_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Malformed,
    InvalidTime,
    InvalidValue,
    NonEnglish,
    OffTopic,
    EmptyExtraction,
    UnresolvableGeo,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::Malformed => "malformed",
            SkipReason::InvalidTime => "invalid_time",
            SkipReason::InvalidValue => "invalid_value",
            SkipReason::NonEnglish => "non_english",
            SkipReason::OffTopic => "off_topic",
            SkipReason::EmptyExtraction => "empty_extraction",
            SkipReason::UnresolvableGeo => "unresolvable_geo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SkipReason::Malformed,
            SkipReason::InvalidTime,
            SkipReason::InvalidValue,
            SkipReason::NonEnglish,
            SkipReason::OffTopic,
            SkipReason::EmptyExtraction,
            SkipReason::UnresolvableGeo,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

/// Counts of records seen, kept and skipped (by reason).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub records_read: u64,
    pub records_kept: u64,
    pub skipped: BTreeMap<SkipReason, u64>,
}

impl RunStats {
    pub fn merge(&mut self, other: &RunStats) {
        self.records_read += other.records_read;
        self.records_kept += other.records_kept;
        for (r, n) in &other.skipped {
            *self.skipped.entry(*r).or_insert(0) += n;
        }
    }

    pub fn skipped_total(&self) -> u64 {
        self.skipped.values().sum()
    }
}

/// Output of mapping one record.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedRecord {
    pub site: SiteKey,
    pub phrases: Vec<Keyphrase>,
    /// Prorated value per bin.
    pub shares: Vec<(TimeBin, f64)>,
}

impl MappedRecord {
    /// The record's contributions: `w_p × v_b` per phrase and bin (zero
    /// weights suppressed), plus one value share per bin.
    pub fn contributions(&self) -> impl Iterator<Item = Contribution> + '_ {
        self.shares.iter().flat_map(move |&(bin, share)| {
            let value = std::iter::once(Contribution::Value {
                site: self.site,
                bin,
                value: Amount::from_f64(share),
                count: 1,
            });
            let phrases = self.phrases.iter().filter_map(move |p| {
                let weight = Amount::from_f64(p.weight * share);
                (!weight.is_zero()).then(|| Contribution::Phrase {
                    site: self.site,
                    bin,
                    phrase: p.display(),
                    weight,
                })
            });
            value.chain(phrases)
        })
    }
}

/// One unit of mapper output keyed by site and bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Contribution {
    Phrase {
        site: SiteKey,
        bin: TimeBin,
        phrase: String,
        weight: Amount,
    },
    Value {
        site: SiteKey,
        bin: TimeBin,
        value: Amount,
        count: u64,
    },
}

/// Reducer state. Summation is over integers, so merging is associative and
/// commutative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregate {
    triples: HashMap<(SiteKey, TimeBin, String), Amount>,
    summaries: HashMap<(SiteKey, TimeBin), (Amount, u64)>,
    pub stats: RunStats,
}

impl Aggregate {
    pub fn push(&mut self, c: Contribution) {
        match c {
            Contribution::Phrase { site, bin, phrase, weight } => {
                *self.triples.entry((site, bin, phrase)).or_default() += weight;
            }
            Contribution::Value { site, bin, value, count } => {
                let e = self.summaries.entry((site, bin)).or_default();
                e.0 += value;
                e.1 += count;
            }
        }
    }

    pub fn add_record(&mut self, mapped: &MappedRecord) {
        self.stats.records_read += 1;
        self.stats.records_kept += 1;
        for c in mapped.contributions() {
            self.push(c);
        }
    }

    pub fn add_skip(&mut self, reason: SkipReason) {
        self.stats.records_read += 1;
        *self.stats.skipped.entry(reason).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: Aggregate) {
        if self.triples.len() + self.summaries.len() < other.triples.len() + other.summaries.len() {
            let mine = std::mem::replace(self, other);
            return self.merge(mine);
        }
        for (k, v) in other.triples {
            *self.triples.entry(k).or_default() += v;
        }
        for (k, (v, n)) in other.summaries {
            let e = self.summaries.entry(k).or_default();
            e.0 += v;
            e.1 += n;
        }
        self.stats.merge(&other.stats);
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty() && self.summaries.is_empty() && self.stats == RunStats::default()
    }

    /// Rebuilds reducer state from a finished dataset.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut agg = Aggregate::default();
        for t in &ds.triples {
            agg.triples.insert((t.site, t.bin, t.phrase.clone()), t.weight);
        }
        for s in &ds.summaries {
            agg.summaries.insert((s.site, s.bin), (s.total_value, s.doc_count));
        }
        agg.stats = ds.manifest.stats();
        agg
    }

    /// Canonical contribution stream: summaries then triples, each in
    /// dataset order.
    pub fn contributions(&self) -> Vec<Contribution> {
        let (triples, summaries) = self.sorted_tables();
        summaries
            .into_iter()
            .map(|s| Contribution::Value {
                site: s.site,
                bin: s.bin,
                value: s.total_value,
                count: s.doc_count,
            })
            .chain(triples.into_iter().map(|t| Contribution::Phrase {
                site: t.site,
                bin: t.bin,
                phrase: t.phrase,
                weight: t.weight,
            }))
            .collect()
    }

    fn sorted_tables(&self) -> (Vec<SiteTriple>, Vec<SiteSummary>) {
        let mut triples: Vec<SiteTriple> = self
            .triples
            .iter()
            .map(|((site, bin, phrase), w)| SiteTriple {
                site: *site,
                bin: *bin,
                phrase: phrase.clone(),
                weight: *w,
            })
            .collect();
        triples.sort_by(SiteTriple::canonical_cmp);
        let mut summaries: Vec<SiteSummary> = self
            .summaries
            .iter()
            .map(|((site, bin), (v, n))| SiteSummary {
                site: *site,
                bin: *bin,
                total_value: *v,
                doc_count: *n,
            })
            .collect();
        summaries.sort_by_key(|s| (s.site, s.bin));
        (triples, summaries)
    }

    pub fn into_dataset(self, config: &PipelineConfig, fingerprint: &str) -> Dataset {
        let (triples, summaries) = self.sorted_tables();
        let manifest = Manifest::describe(FORMAT_VERSION, fingerprint, config, &self.stats, &triples, &summaries);
        Dataset {
            manifest,
            triples,
            summaries,
        }
    }
}

/// Sums a stream of contributions.
pub fn reduce(contributions: impl IntoIterator<Item = Contribution>) -> Aggregate {
    let mut agg = Aggregate::default();
    for c in contributions {
        agg.push(c);
    }
    agg
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(
        "configuration fingerprint {given} does not match the dataset's {expected}; \
         appending requires the same corpus, extraction parameters, granularity and filters"
    )]
    FingerprintMismatch { expected: String, given: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Everything a worker needs to map records. Immutable and shared.
pub struct Pipeline {
    config: PipelineConfig,
    corpus: Arc<ReferenceCorpus>,
    geocoder: Arc<Geocoder>,
    fingerprint: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, corpus: Arc<ReferenceCorpus>, geocoder: Arc<Geocoder>) -> Result<Self, ConfigError> {
        config.validate()?;
        let fingerprint = config.fingerprint(&corpus);
        Ok(Self {
            config,
            corpus,
            geocoder,
            fingerprint,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn corpus(&self) -> &ReferenceCorpus {
        &self.corpus
    }

    /// prepare → filter → extract → geocode → prorate for one record.
    pub fn map_record(&self, record: &Record) -> Result<MappedRecord, SkipReason> {
        let t0 = record.t0.to_epoch().map_err(|_| SkipReason::InvalidTime)?;
        let t1 = match &record.t1 {
            Some(t) => t.to_epoch().map_err(|_| SkipReason::InvalidTime)?,
            None => t0,
        };
        let range = TimeRange::new(t0, t1).map_err(|_| SkipReason::InvalidTime)?;
        let value = record.value.unwrap_or(1.0);
        if !(value.is_finite() && value >= 0.0) {
            return Err(SkipReason::InvalidValue);
        }

        let filters = &self.config.filters;
        let prepared = prepare(&record.text, filters.strip_urls);
        if filters.english && !is_english(&prepared, &record.text, &self.corpus) {
            return Err(SkipReason::NonEnglish);
        }
        if !matches_topic(&prepared, &filters.topic_terms) {
            return Err(SkipReason::OffTopic);
        }
        let phrases = extract(&prepared, &self.corpus, &self.config.params);
        if phrases.is_empty() {
            return Err(SkipReason::EmptyExtraction);
        }
        let point = self.geocoder.resolve(&record.geo).map_err(|_| SkipReason::UnresolvableGeo)?;
        Ok(MappedRecord {
            site: SiteKey::from_degrees(point.lat, point.lon),
            phrases,
            shares: prorate(range, value, self.config.granularity),
        })
    }

    fn map_into(&self, agg: &mut Aggregate, rec: &InputRecord) {
        match rec {
            Err(_) => agg.add_skip(SkipReason::Malformed),
            Ok(r) => match self.map_record(r) {
                Ok(m) => agg.add_record(&m),
                Err(reason) => agg.add_skip(reason),
            },
        }
    }

    /// Maps records on `workers` threads; record `i` goes to queue
    /// `i mod workers`. Worker outputs are merged pairwise.
    pub fn map_all(&self, records: &[InputRecord], workers: usize) -> Aggregate {
        let workers = workers.max(1);
        if workers == 1 {
            let mut agg = Aggregate::default();
            records.iter().for_each(|r| self.map_into(&mut agg, r));
            return agg;
        }
        let mut parts: Vec<Aggregate> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        let mut agg = Aggregate::default();
                        records.iter().skip(w).step_by(workers).for_each(|r| self.map_into(&mut agg, r));
                        agg
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("map worker panicked")).collect()
        });
        while parts.len() > 1 {
            let mut next = Vec::with_capacity(parts.len().div_ceil(2));
            let mut it = parts.into_iter();
            while let Some(mut a) = it.next() {
                if let Some(b) = it.next() {
                    a.merge(b);
                }
                next.push(a);
            }
            parts = next;
        }
        parts.pop().unwrap_or_default()
    }

    pub fn run(&self, records: &[InputRecord], workers: usize) -> Dataset {
        self.map_all(records, workers).into_dataset(&self.config, &self.fingerprint)
    }

    pub fn check_fingerprint(&self, expected: &str) -> Result<(), PipelineError> {
        if expected != self.fingerprint {
            return Err(PipelineError::FingerprintMismatch {
                expected: expected.to_string(),
                given: self.fingerprint.clone(),
            });
        }
        Ok(())
    }

    /// Adds `records` to an existing dataset. The result equals a full run
    /// over the union of inputs.
    pub fn append(&self, dataset: &Dataset, records: &[InputRecord], workers: usize) -> Result<Dataset, PipelineError> {
        self.check_fingerprint(&dataset.manifest.fingerprint)?;
        let mut agg = Aggregate::from_dataset(dataset);
        agg.merge(self.map_all(records, workers));
        Ok(agg.into_dataset(&self.config, &self.fingerprint))
    }
}
