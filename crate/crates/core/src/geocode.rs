//! Resolution of free-form geo references to coordinates.
//!
//! Tiers, first hit wins: literal `lat,lon`, a five-digit zip code looked up
//! in the zip table, `city, region[, country]` in the gazetteer, and finally
//! an optional external geocoder behind a persistent on-disk cache.

use std::collections::{HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BUNDLED_ZIPS: &str = include_str!("../../../data/geo/zips.csv");
pub const BUNDLED_GAZETTEER: &str = include_str!("../../../data/geo/gazetteer.tsv");

/// Environment variable naming the external geocoder endpoint.
pub const GEOCODER_URL_ENV: &str = "GEOTEXT_GEOCODER_URL";
/// Environment variable holding the external geocoder API key.
pub const GEOCODER_KEY_ENV: &str = "GEOTEXT_GEOCODER_KEY";

#[derive(Debug, Error)]
pub enum GeocodeError {
    #[error("could not resolve {0:?}")]
    Unresolvable(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file} line {line}: {reason}")]
    Table { file: String, line: usize, reason: String },
    #[error("external geocoder: {0}")]
    External(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoSource {
    Zip,
    Gazetteer,
    External,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    pub source: GeoSource,
}

fn in_range(lat: f64, lon: f64) -> bool {
    lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)
}

/// Lowercases, trims each comma-separated part and collapses whitespace.
pub fn normalize_query(s: &str) -> String {
    s.split(',')
        .map(|part| part.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_literal(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(',')?;
    let lat: f64 = a.trim().parse().ok()?;
    let lon: f64 = b.trim().parse().ok()?;
    in_range(lat, lon).then_some((lat, lon))
}

/// First run of exactly five ASCII digits.
fn find_zip(s: &str) -> Option<&str> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i - start == 5 {
                return Some(&s[start..i]);
            }
        } else {
            i += 1;
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerEntry {
    pub name: String,
    pub admin: String,
    pub country: String,
    pub lat: f64,
    pub lon: f64,
    pub population: Option<u64>,
}

/// Zip table plus gazetteer, immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct GeoTables {
    zips: HashMap<String, (f64, f64)>,
    places: HashMap<String, Vec<GazetteerEntry>>,
}

impl GeoTables {
    pub fn bundled() -> Self {
        let mut t = Self::default();
        t.add_zip_csv(BUNDLED_ZIPS, "zips.csv").expect("bundled zip table");
        t.add_gazetteer_tsv(BUNDLED_GAZETTEER, "gazetteer.tsv").expect("bundled gazetteer");
        t
    }

    pub fn load(zips: Option<&Path>, gazetteer: Option<&Path>) -> Result<Self, GeocodeError> {
        let mut t = Self::default();
        if let Some(p) = zips {
            t.add_zip_csv(&fs::read_to_string(p)?, &p.display().to_string())?;
        }
        if let Some(p) = gazetteer {
            t.add_gazetteer_tsv(&fs::read_to_string(p)?, &p.display().to_string())?;
        }
        Ok(t)
    }

    /// `zip,lat,lon` with a header row.
    pub fn add_zip_csv(&mut self, text: &str, file: &str) -> Result<(), GeocodeError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (i, row) in reader.records().enumerate() {
            let line = i + 2;
            let table_err = |reason: String| GeocodeError::Table {
                file: file.to_string(),
                line,
                reason,
            };
            let row = row.map_err(|e| table_err(e.to_string()))?;
            if row.len() != 3 {
                return Err(table_err("expected zip,lat,lon".into()));
            }
            let lat: f64 = row[1].trim().parse().map_err(|_| table_err("bad latitude".into()))?;
            let lon: f64 = row[2].trim().parse().map_err(|_| table_err("bad longitude".into()))?;
            if !in_range(lat, lon) {
                return Err(table_err("coordinates out of range".into()));
            }
            self.zips.insert(row[0].trim().to_string(), (lat, lon));
        }
        Ok(())
    }

    /// `name<TAB>admin<TAB>country<TAB>lat<TAB>lon[<TAB>population]`; an
    /// optional header row starting with `name` is skipped.
    pub fn add_gazetteer_tsv(&mut self, text: &str, file: &str) -> Result<(), GeocodeError> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || (i == 0 && line.starts_with("name\t")) {
                continue;
            }
            let table_err = |reason: &str| GeocodeError::Table {
                file: file.to_string(),
                line: i + 1,
                reason: reason.to_string(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            if !(5..=6).contains(&f.len()) {
                return Err(table_err("expected 5 or 6 tab-separated fields"));
            }
            let lat: f64 = f[3].trim().parse().map_err(|_| table_err("bad latitude"))?;
            let lon: f64 = f[4].trim().parse().map_err(|_| table_err("bad longitude"))?;
            if !in_range(lat, lon) {
                return Err(table_err("coordinates out of range"));
            }
            let population = match f.get(5).map(|s| s.trim()) {
                None | Some("") => None,
                Some(p) => Some(p.parse().map_err(|_| table_err("bad population"))?),
            };
            let entry = GazetteerEntry {
                name: f[0].trim().to_string(),
                admin: f[1].trim().to_string(),
                country: f[2].trim().to_string(),
                lat,
                lon,
                population,
            };
            self.places.entry(normalize_query(&entry.name)).or_default().push(entry);
        }
        Ok(())
    }

    pub fn zip(&self, zip: &str) -> Option<(f64, f64)> {
        self.zips.get(zip).copied()
    }

    /// Looks up `city[, region[, country]]`. A two-part query matches the
    /// second part against either the admin region or the country. Among
    /// several matches the most populous wins, else the first listed.
    pub fn place(&self, normalized: &str) -> Option<&GazetteerEntry> {
        let parts: Vec<&str> = normalized.split(", ").collect();
        let rows = self.places.get(parts[0])?;
        let eq = |a: &str, b: &str| a.eq_ignore_ascii_case(b);
        let matches: Vec<&GazetteerEntry> = rows
            .iter()
            .filter(|e| match parts.len() {
                1 => true,
                2 => eq(&e.admin, parts[1]) || eq(&e.country, parts[1]),
                3 => eq(&e.admin, parts[1]) && eq(&e.country, parts[2]),
                _ => false,
            })
            .collect();
        if matches.len() > 1 {
            log::debug!("ambiguous place {normalized:?}: {} gazetteer rows", matches.len());
        }
        let mut best: Option<&GazetteerEntry> = None;
        for e in matches {
            best = match best {
                Some(b) if e.population.unwrap_or(0) <= b.population.unwrap_or(0) => Some(b),
                _ => Some(e),
            };
        }
        best
    }
}

/// An external geocoding provider: query in, coordinates out.
pub trait ExternalGeocoder: Send + Sync {
    fn geocode(&self, query: &str) -> Result<Option<(f64, f64)>, GeocodeError>;
}

/// HTTP provider. Issues `GET {endpoint}?q={query}[&key={key}]` and expects
/// `{"lat": <number>, "lon": <number>}`; a 404 or null coordinates mean no
/// match.
pub struct HttpGeocoder {
    endpoint: String,
    key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct HttpAnswer {
    lat: Option<f64>,
    lon: Option<f64>,
}

impl HttpGeocoder {
    pub fn new(endpoint: impl Into<String>, key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(20)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            key,
            agent,
        }
    }

    /// Reads the endpoint and key from the environment.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(GEOCODER_URL_ENV).ok().filter(|s| !s.is_empty())?;
        Some(Self::new(url, std::env::var(GEOCODER_KEY_ENV).ok()))
    }
}

impl ExternalGeocoder for HttpGeocoder {
    fn geocode(&self, query: &str) -> Result<Option<(f64, f64)>, GeocodeError> {
        let mut req = self.agent.get(&self.endpoint).query("q", query);
        if let Some(key) = &self.key {
            req = req.query("key", key);
        }
        let mut resp = req.call().map_err(|e| GeocodeError::External(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        if status != 200 {
            return Err(GeocodeError::External(format!("HTTP status {status}")));
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GeocodeError::External(e.to_string()))?;
        let answer: HttpAnswer = serde_json::from_str(&body).map_err(|e| GeocodeError::External(e.to_string()))?;
        Ok(match (answer.lat, answer.lon) {
            (Some(lat), Some(lon)) if in_range(lat, lon) => Some((lat, lon)),
            _ => None,
        })
    }
}

/// Offline provider answering from a fixed table and counting calls.
#[derive(Default)]
pub struct StubGeocoder {
    answers: HashMap<String, (f64, f64)>,
    calls: Mutex<usize>,
}

impl StubGeocoder {
    pub fn new(answers: impl IntoIterator<Item = (String, (f64, f64))>) -> Self {
        Self {
            answers: answers.into_iter().map(|(k, v)| (normalize_query(&k), v)).collect(),
            calls: Mutex::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl ExternalGeocoder for StubGeocoder {
    fn geocode(&self, query: &str) -> Result<Option<(f64, f64)>, GeocodeError> {
        *self.calls.lock().unwrap() += 1;
        Ok(self.answers.get(&normalize_query(query)).copied())
    }
}

impl<T: ExternalGeocoder + ?Sized> ExternalGeocoder for std::sync::Arc<T> {
    fn geocode(&self, query: &str) -> Result<Option<(f64, f64)>, GeocodeError> {
        (**self).geocode(query)
    }
}

#[derive(Default)]
struct CacheState {
    hits: HashMap<String, (f64, f64)>,
    misses: HashSet<String>,
}

/// External provider fronted by an append-only TSV cache
/// (`normalized_query<TAB>lat<TAB>lon`). Misses are remembered in memory only.
pub struct CachedGeocoder {
    inner: Box<dyn ExternalGeocoder>,
    path: Option<PathBuf>,
    state: Mutex<CacheState>,
}

impl CachedGeocoder {
    pub fn new(inner: Box<dyn ExternalGeocoder>, path: Option<PathBuf>) -> Result<Self, GeocodeError> {
        let mut state = CacheState::default();
        if let Some(p) = &path {
            if p.exists() {
                for (i, line) in fs::read_to_string(p)?.lines().enumerate() {
                    let f: Vec<&str> = line.split('\t').collect();
                    let parsed = (f.len() == 3)
                        .then(|| Some((f[1].parse::<f64>().ok()?, f[2].parse::<f64>().ok()?)))
                        .flatten();
                    match parsed {
                        Some(ll) => {
                            state.hits.insert(f[0].to_string(), ll);
                        }
                        None => log::warn!("{}: skipping bad cache line {}", p.display(), i + 1),
                    }
                }
            }
        }
        Ok(Self {
            inner,
            path,
            state: Mutex::new(state),
        })
    }

    pub fn lookup(&self, normalized: &str) -> Result<Option<(f64, f64)>, GeocodeError> {
        let mut state = self.state.lock().unwrap();
        if let Some(hit) = state.hits.get(normalized) {
            return Ok(Some(*hit));
        }
        if state.misses.contains(normalized) {
            return Ok(None);
        }
        // held across the call so concurrent misses for one key query once
        match self.inner.geocode(normalized)? {
            Some((lat, lon)) => {
                if let Some(p) = &self.path {
                    let mut f = OpenOptions::new().create(true).append(true).open(p)?;
                    writeln!(f, "{normalized}\t{lat}\t{lon}")?;
                }
                state.hits.insert(normalized.to_string(), (lat, lon));
                Ok(Some((lat, lon)))
            }
            None => {
                state.misses.insert(normalized.to_string());
                Ok(None)
            }
        }
    }
}

/// The tiered resolver shared by all pipeline workers.
pub struct Geocoder {
    tables: GeoTables,
    external: Option<CachedGeocoder>,
}

impl Geocoder {
    pub fn new(tables: GeoTables, external: Option<CachedGeocoder>) -> Self {
        Self { tables, external }
    }

    pub fn offline(tables: GeoTables) -> Self {
        Self::new(tables, None)
    }

    pub fn resolve(&self, geo_ref: &str) -> Result<GeoPoint, GeocodeError> {
        let trimmed = geo_ref.trim();
        let unresolvable = || GeocodeError::Unresolvable(geo_ref.to_string());
        if trimmed.is_empty() {
            return Err(unresolvable());
        }
        if let Some((lat, lon)) = parse_literal(trimmed) {
            return Ok(GeoPoint { lat, lon, source: GeoSource::Literal });
        }
        if let Some((lat, lon)) = find_zip(trimmed).and_then(|z| self.tables.zip(z)) {
            return Ok(GeoPoint { lat, lon, source: GeoSource::Zip });
        }
        let normalized = normalize_query(trimmed);
        if let Some(e) = self.tables.place(&normalized) {
            return Ok(GeoPoint {
                lat: e.lat,
                lon: e.lon,
                source: GeoSource::Gazetteer,
            });
        }
        if let Some(ext) = &self.external {
            match ext.lookup(&normalized) {
                Ok(Some((lat, lon))) => return Ok(GeoPoint { lat, lon, source: GeoSource::External }),
                Ok(None) => {}
                Err(e) => log::warn!("external geocoder failed for {normalized:?}: {e}"),
            }
        }
        Err(unresolvable())
    }
}
