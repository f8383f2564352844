//! Dataset persistence and query index.
//!
//! A dataset is a directory holding `manifest.json`, `summaries.tsv` and
//! `triples.tsv`. Tables are sorted canonically so equal datasets are equal
//! byte for byte.

mod query;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::pipeline::{PipelineConfig, RunStats, SiteKey, SkipReason};
use crate::timebin::{Granularity, TimeBin};

pub use query::{quantize, quantize_site, zoom_decimals, BBox, BBoxError, QuantizedSite, SiteHit, Store, MAX_ZOOM};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARIES_FILE: &str = "summaries.tsv";
pub const TRIPLES_FILE: &str = "triples.tsv";

const SUMMARIES_HEADER: &str = "lat\tlon\tbin\ttotal_value\tdoc_count";
const TRIPLES_HEADER: &str = "lat\tlon\tbin\tphrase\tweight";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}:{line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error("{file}: {source}")]
    Manifest { file: String, source: serde_json::Error },
    #[error("unsupported dataset version {0} (this build reads version {FORMAT_VERSION})")]
    Version(u32),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteTriple {
    pub site: SiteKey,
    pub bin: TimeBin,
    pub phrase: String,
    pub weight: Amount,
}

impl SiteTriple {
    /// Site, bin, heaviest first, then phrase.
    pub fn canonical_cmp(a: &Self, b: &Self) -> Ordering {
        (a.site, a.bin)
            .cmp(&(b.site, b.bin))
            .then(b.weight.cmp(&a.weight))
            .then_with(|| a.phrase.cmp(&b.phrase))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSummary {
    pub site: SiteKey,
    pub bin: TimeBin,
    pub total_value: Amount,
    pub doc_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub fingerprint: String,
    pub granularity: Granularity,
    /// Labels of populated bins, ascending.
    pub bins: Vec<String>,
    pub records_read: u64,
    pub records_kept: u64,
    pub skipped: BTreeMap<SkipReason, u64>,
    pub site_count: usize,
    pub summary_count: usize,
    pub triple_count: usize,
    pub config: PipelineConfig,
}

impl Manifest {
    pub fn describe(
        version: u32,
        fingerprint: &str,
        config: &PipelineConfig,
        stats: &RunStats,
        triples: &[SiteTriple],
        summaries: &[SiteSummary],
    ) -> Self {
        let mut bins: Vec<TimeBin> = summaries.iter().map(|s| s.bin).collect();
        bins.sort();
        bins.dedup();
        let mut sites: Vec<SiteKey> = summaries.iter().map(|s| s.site).collect();
        sites.dedup();
        Self {
            version,
            fingerprint: fingerprint.to_string(),
            granularity: config.granularity,
            bins: bins.iter().map(TimeBin::label).collect(),
            records_read: stats.records_read,
            records_kept: stats.records_kept,
            skipped: stats.skipped.clone(),
            site_count: sites.len(),
            summary_count: summaries.len(),
            triple_count: triples.len(),
            config: config.clone(),
        }
    }

    pub fn stats(&self) -> RunStats {
        RunStats {
            records_read: self.records_read,
            records_kept: self.records_kept,
            skipped: self.skipped.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    /// Sorted by [`SiteTriple::canonical_cmp`].
    pub triples: Vec<SiteTriple>,
    /// Sorted by (site, bin).
    pub summaries: Vec<SiteSummary>,
}

fn push_row(out: &mut String, fields: &[&str]) {
    out.push_str(&fields.join("\t"));
    out.push('\n');
}

impl Dataset {
    pub fn bins(&self) -> Result<Vec<TimeBin>, StoreError> {
        self.manifest
            .bins
            .iter()
            .map(|l| {
                TimeBin::parse_label(l, self.manifest.granularity)
                    .map_err(|e| StoreError::Inconsistent(format!("manifest bin {l:?}: {e}")))
            })
            .collect()
    }

    pub fn total_value(&self) -> Amount {
        self.summaries.iter().map(|s| s.total_value).sum()
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn summaries_tsv(&self) -> String {
        let mut out = String::with_capacity(self.summaries.len() * 48);
        push_row(&mut out, &[SUMMARIES_HEADER]);
        for s in &self.summaries {
            push_row(
                &mut out,
                &[
                    &s.site.lat_str(),
                    &s.site.lon_str(),
                    &s.bin.label(),
                    &s.total_value.to_string(),
                    &s.doc_count.to_string(),
                ],
            );
        }
        out
    }

    pub fn triples_tsv(&self) -> String {
        let mut out = String::with_capacity(self.triples.len() * 56);
        push_row(&mut out, &[TRIPLES_HEADER]);
        for t in &self.triples {
            push_row(
                &mut out,
                &[&t.site.lat_str(), &t.site.lon_str(), &t.bin.label(), &t.phrase, &t.weight.to_string()],
            );
        }
        out
    }

    /// Writes the dataset to `dir`, replacing any previous contents by
    /// renaming a fully written sibling directory into place.
    pub fn write_dir(&self, dir: &Path) -> Result<(), StoreError> {
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(io_err(&parent))?;
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
        let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
        }
        fs::create_dir(&tmp).map_err(io_err(&tmp))?;
        for (file, body) in [
            (SUMMARIES_FILE, self.summaries_tsv()),
            (TRIPLES_FILE, self.triples_tsv()),
            (MANIFEST_FILE, self.manifest_json()),
        ] {
            let p = tmp.join(file);
            fs::write(&p, body).map_err(io_err(&p))?;
        }
        let old = parent.join(format!(".{name}.old-{}", std::process::id()));
        if dir.exists() {
            fs::rename(dir, &old).map_err(io_err(dir))?;
        }
        fs::rename(&tmp, dir).map_err(io_err(dir))?;
        if old.exists() {
            fs::remove_dir_all(&old).map_err(io_err(&old))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self, StoreError> {
        let read = |file: &str| {
            let p = dir.join(file);
            fs::read_to_string(&p).map_err(io_err(&p))
        };
        let manifest: Manifest = serde_json::from_str(&read(MANIFEST_FILE)?).map_err(|source| StoreError::Manifest {
            file: MANIFEST_FILE.into(),
            source,
        })?;
        if manifest.version != FORMAT_VERSION {
            return Err(StoreError::Version(manifest.version));
        }
        let g = manifest.granularity;
        let summaries = parse_table(&read(SUMMARIES_FILE)?, SUMMARIES_FILE, SUMMARIES_HEADER, |f| {
            Ok(SiteSummary {
                site: site(f[0], f[1])?,
                bin: bin(f[2], g)?,
                total_value: amount(f[3])?,
                doc_count: f[4].parse().map_err(|_| format!("bad doc_count {:?}", f[4]))?,
            })
        })?;
        let triples = parse_table(&read(TRIPLES_FILE)?, TRIPLES_FILE, TRIPLES_HEADER, |f| {
            Ok(SiteTriple {
                site: site(f[0], f[1])?,
                bin: bin(f[2], g)?,
                phrase: f[3].to_string(),
                weight: amount(f[4])?,
            })
        })?;
        let ds = Dataset {
            manifest,
            triples,
            summaries,
        };
        ds.check()?;
        Ok(ds)
    }

    /// Verifies ordering, uniqueness and cross-table invariants.
    pub fn check(&self) -> Result<(), StoreError> {
        let bad = |m: String| Err(StoreError::Inconsistent(m));
        if !self.summaries.windows(2).all(|w| (w[0].site, w[0].bin) < (w[1].site, w[1].bin)) {
            return bad("summaries not strictly sorted by (site, bin)".into());
        }
        if !self.triples.windows(2).all(|w| SiteTriple::canonical_cmp(&w[0], &w[1]) == Ordering::Less) {
            return bad("triples not in canonical order".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(t) = self.triples.iter().find(|t| !seen.insert((t.site, t.bin, t.phrase.as_str()))) {
            return bad(format!("duplicate triple {:?} at {} {}", t.phrase, t.site, t.bin));
        }
        if let Some(t) = self.triples.iter().find(|t| t.weight.is_zero()) {
            return bad(format!("zero-weight triple {:?} at {}", t.phrase, t.site));
        }
        for t in &self.triples {
            if self.summaries.binary_search_by(|s| (s.site, s.bin).cmp(&(t.site, t.bin))).is_err() {
                return bad(format!("triple at {} {} has no summary", t.site, t.bin));
            }
        }
        let populated: std::collections::BTreeSet<TimeBin> = self.summaries.iter().map(|s| s.bin).collect();
        let bins: Vec<String> = populated.iter().map(TimeBin::label).collect();
        if bins != self.manifest.bins {
            return bad("manifest bins differ from populated bins".into());
        }
        if self.manifest.triple_count != self.triples.len() || self.manifest.summary_count != self.summaries.len() {
            return bad("manifest counts differ from tables".into());
        }
        Ok(())
    }
}

fn site(lat: &str, lon: &str) -> Result<SiteKey, String> {
    SiteKey::parse(lat, lon).ok_or_else(|| format!("bad coordinates {lat:?},{lon:?}"))
}

fn bin(label: &str, g: Granularity) -> Result<TimeBin, String> {
    TimeBin::parse_label(label, g).map_err(|e| e.to_string())
}

fn amount(s: &str) -> Result<Amount, String> {
    s.parse().map_err(|e: crate::amount::AmountParseError| e.to_string())
}

fn parse_table<T>(
    text: &str,
    file: &str,
    header: &str,
    row: impl Fn(&[&str]) -> Result<T, String>,
) -> Result<Vec<T>, StoreError> {
    let err = |line: usize, reason: String| StoreError::Format {
        file: file.to_string(),
        line,
        reason,
    };
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(err(1, format!("expected header {header:?}")));
    }
    let columns = header.split('\t').count();
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != columns {
                return Err(err(i + 2, format!("expected {columns} fields, found {}", fields.len())));
            }
            row(&fields).map_err(|r| err(i + 2, r))
        })
        .collect()
}
