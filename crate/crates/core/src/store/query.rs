use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use super::{Dataset, SiteTriple, StoreError};
use crate::amount::Amount;
use crate::pipeline::{format_fixed, SiteKey};
use crate::timebin::TimeBin;

pub const MAX_ZOOM: u8 = 21;

/// Decimal places kept at a zoom level: `clamp(ceil(z / 4), 1, 4)`.
pub fn zoom_decimals(zoom: u8) -> u32 {
    u32::from(zoom.min(MAX_ZOOM)).div_ceil(4).clamp(1, SiteKey::DECIMALS)
}

/// Rounds both coordinates half away from zero to `zoom_decimals(zoom)`
/// places.
pub fn quantize(lat: f64, lon: f64, zoom: u8) -> (f64, f64) {
    let scale = 10f64.powi(zoom_decimals(zoom) as i32);
    ((lat * scale).round() / scale, (lon * scale).round() / scale)
}

/// A site truncated for transport, as integer units of `10^-decimals`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuantizedSite {
    pub lat: i32,
    pub lon: i32,
    pub decimals: u32,
}

impl QuantizedSite {
    pub fn lat_degrees(&self) -> f64 {
        f64::from(self.lat) / 10f64.powi(self.decimals as i32)
    }

    pub fn lon_degrees(&self) -> f64 {
        f64::from(self.lon) / 10f64.powi(self.decimals as i32)
    }

    pub fn lat_str(&self) -> String {
        format_fixed(self.lat.into(), self.decimals)
    }

    pub fn lon_str(&self) -> String {
        format_fixed(self.lon.into(), self.decimals)
    }
}

fn round_div(x: i32, d: i32) -> i32 {
    let q = (x.abs() + d / 2) / d;
    if x < 0 {
        -q
    } else {
        q
    }
}

/// Integer form of [`quantize`] for site keys. Exact, with no float
/// rounding at half-way points.
pub fn quantize_site(site: SiteKey, zoom: u8) -> QuantizedSite {
    let decimals = zoom_decimals(zoom);
    let d = 10i32.pow(SiteKey::DECIMALS - decimals);
    QuantizedSite {
        lat: round_div(site.lat_units(), d),
        lon: round_div(site.lon_units(), d),
        decimals,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BBoxError {
    #[error("bbox must be west,south,east,north")]
    Shape,
    #[error("bbox coordinate {0:?} is not a number")]
    Number(String),
    #[error("bbox out of range: latitudes within [-90, 90] with south <= north, longitudes within [-180, 180]")]
    Range,
}

/// A lat/lon rectangle. Edges are half-open (`south <= lat < north`,
/// `west <= lon < east`) except that `north = 90` and `east = 180` are
/// inclusive. `west > east` crosses the antimeridian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BBox {
    pub const WORLD: BBox = BBox {
        south: -90.0,
        west: -180.0,
        north: 90.0,
        east: 180.0,
    };

    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self, BBoxError> {
        let finite = [south, west, north, east].iter().all(|v| v.is_finite());
        let lat_ok = (-90.0..=90.0).contains(&south) && (-90.0..=90.0).contains(&north) && south <= north;
        let lon_ok = (-180.0..=180.0).contains(&west) && (-180.0..=180.0).contains(&east);
        if !(finite && lat_ok && lon_ok) {
            return Err(BBoxError::Range);
        }
        Ok(Self { south, west, north, east })
    }

    /// Parses `west,south,east,north`.
    pub fn parse(s: &str) -> Result<Self, BBoxError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(BBoxError::Shape);
        }
        let mut v = [0f64; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| BBoxError::Number(p.to_string()))?;
        }
        Self::new(v[1], v[0], v[3], v[2])
    }

    pub fn contains_lat(&self, lat: f64) -> bool {
        lat >= self.south && (lat < self.north || (self.north == 90.0 && lat <= 90.0))
    }

    pub fn contains_lon(&self, lon: f64) -> bool {
        let below_east = lon < self.east || (self.east == 180.0 && lon <= 180.0);
        if self.west <= self.east {
            lon >= self.west && below_east
        } else {
            lon >= self.west || below_east
        }
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        self.contains_lat(lat) && self.contains_lon(lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteHit {
    pub site: SiteKey,
    pub quantized: QuantizedSite,
    pub total_value: Amount,
    pub doc_count: u64,
}

/// Read-only index over a dataset.
#[derive(Debug)]
pub struct Store {
    dataset: Dataset,
    bins: Vec<TimeBin>,
    /// Summary indices per bin, ordered by site.
    by_bin: HashMap<TimeBin, Vec<usize>>,
    triples: HashMap<(SiteKey, TimeBin), Range<usize>>,
}

impl Store {
    pub fn new(dataset: Dataset) -> Result<Self, StoreError> {
        dataset.check()?;
        let bins = dataset.bins()?;
        let mut by_bin: HashMap<TimeBin, Vec<usize>> = HashMap::new();
        for (i, s) in dataset.summaries.iter().enumerate() {
            by_bin.entry(s.bin).or_default().push(i);
        }
        let mut triples: HashMap<(SiteKey, TimeBin), Range<usize>> = HashMap::new();
        for (i, t) in dataset.triples.iter().enumerate() {
            triples.entry((t.site, t.bin)).or_insert(i..i).end = i + 1;
        }
        Ok(Self {
            dataset,
            bins,
            by_bin,
            triples,
        })
    }

    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        Self::new(Dataset::read_dir(dir)?)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Populated bins, ascending.
    pub fn bins(&self) -> &[TimeBin] {
        &self.bins
    }

    pub fn bin(&self, label: &str) -> Option<TimeBin> {
        let bin = TimeBin::parse_label(label, self.dataset.manifest.granularity).ok()?;
        self.by_bin.contains_key(&bin).then_some(bin)
    }

    pub fn has_site(&self, site: SiteKey) -> bool {
        let s = &self.dataset.summaries;
        let i = s.partition_point(|x| x.site < site);
        s.get(i).is_some_and(|x| x.site == site)
    }

    pub fn has_site_bin(&self, site: SiteKey, bin: TimeBin) -> bool {
        self.dataset
            .summaries
            .binary_search_by(|s| (s.site, s.bin).cmp(&(site, bin)))
            .is_ok()
    }

    /// Top `limit` sites inside `bbox` at `bin` by total value (ties by
    /// site), with coordinates truncated for `zoom`.
    pub fn query_sites(&self, bbox: &BBox, bin: TimeBin, limit: usize, zoom: u8) -> Vec<SiteHit> {
        let Some(idx) = self.by_bin.get(&bin) else {
            return Vec::new();
        };
        let summaries = &self.dataset.summaries;
        let start = idx.partition_point(|&i| summaries[i].site.lat() < bbox.south);
        let mut hits: Vec<&super::SiteSummary> = idx[start..]
            .iter()
            .map(|&i| &summaries[i])
            .take_while(|s| bbox.contains_lat(s.site.lat()))
            .filter(|s| bbox.contains_lon(s.site.lon()))
            .collect();
        hits.sort_by(|a, b| b.total_value.cmp(&a.total_value).then(a.site.cmp(&b.site)));
        hits.truncate(limit);
        hits.into_iter()
            .map(|s| SiteHit {
                site: s.site,
                quantized: quantize_site(s.site, zoom),
                total_value: s.total_value,
                doc_count: s.doc_count,
            })
            .collect()
    }

    /// Heaviest `max_tags` phrases at a site and bin; ties by phrase.
    pub fn query_cloud(&self, site: SiteKey, bin: TimeBin, max_tags: usize) -> &[SiteTriple] {
        match self.triples.get(&(site, bin)) {
            Some(r) => {
                let r = r.start..r.end.min(r.start + max_tags);
                &self.dataset.triples[r]
            }
            None => &[],
        }
    }

    /// Weight of `phrase` at `site` in every populated bin, divided by the
    /// series maximum.
    pub fn query_spark(&self, site: SiteKey, phrase: &str) -> Vec<(TimeBin, f64)> {
        let raw: Vec<(TimeBin, Amount)> = self
            .bins
            .iter()
            .map(|&b| {
                let w = self
                    .triples
                    .get(&(site, b))
                    .and_then(|r| self.dataset.triples[r.clone()].iter().find(|t| t.phrase == phrase))
                    .map_or(Amount::ZERO, |t| t.weight);
                (b, w)
            })
            .collect();
        let max = raw.iter().map(|(_, w)| *w).max().unwrap_or(Amount::ZERO);
        raw.into_iter()
            .map(|(b, w)| {
                let v = if max.is_zero() { 0.0 } else { w.to_f64() / max.to_f64() };
                (b, v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{reduce, Contribution, PipelineConfig};
    use crate::timebin::Granularity;
    use proptest::prelude::*;

    fn year(y: &str) -> TimeBin {
        TimeBin::parse_label(y, Granularity::Year).unwrap()
    }

    type Entry<'a> = (f64, f64, &'a str, f64, &'a [(&'a str, f64)]);

    fn store(entries: &[Entry]) -> Store {
        let mut cs = Vec::new();
        for &(lat, lon, y, v, phrases) in entries {
            let site = SiteKey::from_degrees(lat, lon);
            let bin = year(y);
            cs.push(Contribution::Value {
                site,
                bin,
                value: Amount::from_f64(v),
                count: 1,
            });
            for &(p, w) in phrases {
                cs.push(Contribution::Phrase {
                    site,
                    bin,
                    phrase: p.into(),
                    weight: Amount::from_f64(w),
                });
            }
        }
        Store::new(reduce(cs).into_dataset(&PipelineConfig::nsf(), "fp")).unwrap()
    }

    #[test]
    fn decimals_schedule() {
        let p: Vec<u32> = (0..=21).map(zoom_decimals).collect();
        assert_eq!(p[..6], [1, 1, 1, 1, 1, 2]);
        assert_eq!((p[8], p[9], p[12], p[13]), (2, 3, 3, 4));
        assert!(p[16..].iter().all(|&d| d == 4));
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(47.6543, -122.3081, 0), (47.7, -122.3));
        let s = SiteKey::from_degrees(47.6543, -122.3081);
        let q = quantize_site(s, 0);
        assert_eq!((q.lat_str(), q.lon_str()), ("47.7".to_string(), "-122.3".to_string()));
        let q = quantize_site(s, 18);
        assert_eq!((q.lat, q.lon), (s.lat_units(), s.lon_units()));
        // exact half rounds away from zero
        let q = quantize_site(SiteKey::from_units(-476_550, 476_550), 7);
        assert_eq!((q.lat, q.lon), (-4766, 4766));
    }

    #[test]
    fn bbox_parsing_and_antimeridian() {
        let b = BBox::parse("170,-10,-170,10").unwrap();
        assert!(b.contains(0.0, 175.0) && b.contains(0.0, -175.0) && !b.contains(0.0, 0.0));
        assert!(BBox::parse("1,2,3").is_err());
        assert!(BBox::parse("0,10,1,5").is_err());
        assert_eq!(BBox::parse("a,0,1,1"), Err(BBoxError::Number("a".into())));
        assert!(BBox::WORLD.contains(90.0, 180.0));
        let half = BBox::new(0.0, -180.0, 10.0, 0.0).unwrap();
        assert!(!half.contains(10.0, -5.0) && !half.contains(5.0, 0.0));
    }

    #[test]
    fn sites_ordering_and_limit() {
        let st = store(&[
            (10.0, 10.0, "2008", 5.0, &[]),
            (20.0, 20.0, "2008", 10.0, &[]),
            (30.0, 30.0, "2008", 5.0, &[]),
            (40.0, 40.0, "2009", 99.0, &[]),
        ]);
        let b8 = year("2008");
        let all = st.query_sites(&BBox::WORLD, b8, 200, 21);
        let lats: Vec<f64> = all.iter().map(|h| h.site.lat()).collect();
        assert_eq!(lats, [20.0, 10.0, 30.0]);
        let top = st.query_sites(&BBox::WORLD, b8, 1, 21);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].total_value, Amount::from_f64(10.0));
        let one = BBox::new(25.0, 25.0, 35.0, 35.0).unwrap();
        assert_eq!(st.query_sites(&one, b8, 1, 21)[0].site.lat(), 30.0);
        assert!(st.query_sites(&BBox::WORLD, year("1999"), 10, 3).is_empty());
        assert_eq!(st.bin("2009"), Some(year("2009")));
        assert_eq!(st.bin("1999"), None);
    }

    #[test]
    fn cloud_and_spark() {
        let st = store(&[
            (29.7, -95.4, "2007", 1.0, &[("reu", 2.0), ("k-12", 2.0), ("magnetosphere", 3.0)]),
            (29.7, -95.4, "2008", 1.0, &[("reu", 4.0)]),
            (29.7, -95.4, "2009", 1.0, &[("reu", 1.0)]),
            (10.0, 10.0, "2010", 1.0, &[("reu", 1.0)]),
        ]);
        let s = SiteKey::from_degrees(29.7, -95.4);
        let cloud: Vec<&str> = st.query_cloud(s, year("2007"), 10).iter().map(|t| t.phrase.as_str()).collect();
        assert_eq!(cloud, ["magnetosphere", "k-12", "reu"]);
        assert_eq!(st.query_cloud(s, year("2007"), 1).len(), 1);
        assert!(st.query_cloud(s, year("2010"), 5).is_empty());
        let spark: Vec<f64> = st.query_spark(s, "reu").into_iter().map(|(_, v)| v).collect();
        assert_eq!(spark, [0.5, 1.0, 0.25, 0.0]);
        let spark: Vec<f64> = st.query_spark(s, "magnetosphere").into_iter().map(|(_, v)| v).collect();
        assert_eq!(spark, [1.0, 0.0, 0.0, 0.0]);
        assert!(st.query_spark(s, "absent").iter().all(|(_, v)| *v == 0.0));
        assert!(st.has_site(s) && !st.has_site(SiteKey::from_degrees(0.0, 0.0)));
    }

    proptest! {
        #[test]
        fn quantize_error_bound(lat in -90.0f64..=90.0, lon in -180.0f64..=180.0, zoom in 0u8..=21) {
            let p = zoom_decimals(zoom);
            let bound = 0.5 * 10f64.powi(-(p as i32));
            let (qa, qo) = quantize(lat, lon, zoom);
            // one ulp of slack for the float route
            prop_assert!((qa - lat).abs() <= bound * (1.0 + 1e-9) + f64::EPSILON * 256.0);
            prop_assert!((qo - lon).abs() <= bound * (1.0 + 1e-9) + f64::EPSILON * 256.0);
            let site = SiteKey::from_degrees(lat, lon);
            let q = quantize_site(site, zoom);
            let d = 10i64.pow(SiteKey::DECIMALS - p);
            prop_assert!((i64::from(q.lat) * d - i64::from(site.lat_units())).abs() * 2 <= d);
            prop_assert!((i64::from(q.lon) * d - i64::from(site.lon_units())).abs() * 2 <= d);
        }

        #[test]
        fn bbox_partition_union(
            sites in proptest::collection::vec((-60i32..60, -170i32..170, 1u32..50), 1..30),
            cut_lat in -60.0f64..60.0,
            cut_lon in -170.0f64..170.0,
        ) {
            let entries: Vec<Entry> = sites
                .iter()
                .map(|&(a, o, v)| (f64::from(a), f64::from(o), "2008", f64::from(v), &[][..]))
                .collect();
            let st = store(&entries);
            let b = year("2008");
            let whole = BBox::new(-70.0, -175.0, 70.0, 175.0).unwrap();
            let mut parts = Vec::new();
            for (s, n) in [(-70.0, cut_lat), (cut_lat, 70.0)] {
                for (w, e) in [(-175.0, cut_lon), (cut_lon, 175.0)] {
                    parts.extend(st.query_sites(&BBox::new(s, w, n, e).unwrap(), b, usize::MAX, 21));
                }
            }
            let mut expected = st.query_sites(&whole, b, usize::MAX, 21);
            let key = |h: &SiteHit| h.site;
            parts.sort_by_key(key);
            expected.sort_by_key(key);
            prop_assert_eq!(parts, expected);
        }
    }
}
