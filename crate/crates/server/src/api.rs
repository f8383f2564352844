//! Response bodies. Each builder is a pure function of the store and the
//! query parameters, so repeated requests return identical bytes.

use std::collections::HashMap;

use axum::http::StatusCode;
use geotext_core::layout::{diff_layouts, layout_cloud, CloudLayout, CloudDiff};
use geotext_core::pipeline::{format_fixed, SiteKey};
use geotext_core::store::{quantize_site, zoom_decimals, BBox, Store, MAX_ZOOM};
use geotext_core::timebin::TimeBin;

use crate::encode::{amount3, array, coord, float3, string};

pub const DEFAULT_LIMIT: usize = 200;
pub const MAX_LIMIT: usize = 1000;
pub const DEFAULT_MAX_TAGS: usize = 20;
pub const MAX_TAGS: usize = 200;
/// Cloud canvas radius used for server-side layouts.
pub const DEFAULT_CLOUD_RADIUS: f64 = 240.0;

pub type Params = HashMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }

    pub fn body(&self) -> String {
        format!("{{\"error\":{}}}", string(&self.message))
    }
}

fn required<'a>(params: &'a Params, name: &str) -> Result<&'a str, ApiError> {
    params
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request(format!("missing parameter {name:?}")))
}

fn optional_number<T: std::str::FromStr>(params: &Params, name: &str) -> Result<Option<T>, ApiError> {
    params
        .get(name)
        .map(|v| v.parse().map_err(|_| ApiError::bad_request(format!("parameter {name:?} must be a number, got {v:?}"))))
        .transpose()
}

fn bin(store: &Store, params: &Params) -> Result<TimeBin, ApiError> {
    let label = required(params, "bin")?;
    store.bin(label).ok_or_else(|| ApiError::not_found(format!("unknown bin {label:?}")))
}

fn zoom(params: &Params) -> Result<Option<u8>, ApiError> {
    match optional_number::<u8>(params, "zoom")? {
        Some(z) if z > MAX_ZOOM => Err(ApiError::bad_request(format!("zoom must be 0..={MAX_ZOOM}"))),
        z => Ok(z),
    }
}

fn site_json(site: SiteKey) -> String {
    format!("[{},{}]", site.lat_str(), site.lon_str())
}

/// Manifest plus the preset names the pipeline knows.
pub fn meta_body(store: &Store) -> String {
    let mut v = serde_json::to_value(&store.dataset().manifest).expect("manifest serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.insert("presets".into(), serde_json::json!(["nsf", "twitter", "custom"]));
    }
    serde_json::to_string(&v).expect("json serializes")
}

/// Columnar top-K sites. Coordinates are integer offsets, in units of
/// `10^-decimals` degrees, from `origin`, the smallest truncated latitude
/// and longitude among the returned sites.
pub fn sites_body(store: &Store, params: &Params) -> Result<String, ApiError> {
    let bbox = match params.get("bbox") {
        Some(b) => BBox::parse(b).map_err(|e| ApiError::bad_request(e.to_string()))?,
        None => BBox::WORLD,
    };
    let bin = bin(store, params)?;
    let zoom = zoom(params)?.unwrap_or(MAX_ZOOM);
    let limit = optional_number::<usize>(params, "limit")?.unwrap_or(DEFAULT_LIMIT);
    if !(1..=MAX_LIMIT).contains(&limit) {
        return Err(ApiError::bad_request(format!("limit must be 1..={MAX_LIMIT}")));
    }
    let hits = store.query_sites(&bbox, bin, limit, zoom);
    let decimals = zoom_decimals(zoom);
    let lat0 = hits.iter().map(|h| h.quantized.lat).min().unwrap_or(0);
    let lon0 = hits.iter().map(|h| h.quantized.lon).min().unwrap_or(0);
    Ok(format!(
        "{{\"bin\":{},\"decimals\":{decimals},\"origin\":[{},{}],\"lats\":{},\"lons\":{},\"values\":{},\"counts\":{}}}",
        string(&bin.label()),
        format_fixed(lat0.into(), decimals),
        format_fixed(lon0.into(), decimals),
        array(hits.iter().map(|h| (h.quantized.lat - lat0).to_string())),
        array(hits.iter().map(|h| (h.quantized.lon - lon0).to_string())),
        array(hits.iter().map(|h| amount3(h.total_value))),
        array(hits.iter().map(|h| h.doc_count.to_string())),
    ))
}

/// Resolves `lat`/`lon` to a site. With a `zoom` below full precision the
/// coordinates are read as truncated values and the heaviest site at `bin`
/// that truncates to them is chosen.
fn resolve_site(store: &Store, params: &Params, bin: TimeBin) -> Result<SiteKey, ApiError> {
    let (lat, lon) = (required(params, "lat")?, required(params, "lon")?);
    let unknown = || ApiError::not_found(format!("unknown site {lat},{lon}"));
    let point = SiteKey::parse(lat, lon).ok_or_else(|| ApiError::bad_request(format!("bad coordinates {lat},{lon}")))?;
    match zoom(params)? {
        Some(z) if zoom_decimals(z) < SiteKey::DECIMALS => {
            let target = quantize_site(point, z);
            let step = 10f64.powi(-(target.decimals as i32));
            let around = BBox::new(
                (point.lat() - step).max(-90.0),
                (point.lon() - step).max(-180.0),
                (point.lat() + step).min(90.0),
                (point.lon() + step).min(180.0),
            )
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
            store
                .query_sites(&around, bin, usize::MAX, z)
                .into_iter()
                .find(|h| h.quantized == target)
                .map(|h| h.site)
                .ok_or_else(unknown)
        }
        _ if store.has_site(point) => Ok(point),
        _ => Err(unknown()),
    }
}

fn tags(store: &Store, site: SiteKey, bin: TimeBin, max_tags: usize) -> Vec<(String, f64)> {
    store
        .query_cloud(site, bin, max_tags)
        .iter()
        .map(|t| (t.phrase.clone(), t.weight.to_f64()))
        .collect()
}

/// Layouts for `bin` and the calendar-previous bin. Each layout in a run of
/// consecutive populated bins is seeded with its predecessor, so the
/// result does not depend on which bins a client requested before.
pub fn chained_layouts(
    store: &Store,
    site: SiteKey,
    bin: TimeBin,
    max_tags: usize,
    radius: f64,
) -> (Option<CloudLayout>, CloudLayout) {
    let mut chain = vec![bin];
    let mut b = bin.prev();
    while store.has_site_bin(site, b) {
        chain.push(b);
        b = b.prev();
    }
    let mut prev: Option<CloudLayout> = None;
    let mut current = CloudLayout::empty(radius);
    for b in chain.into_iter().rev() {
        let next = layout_cloud(&tags(store, site, b, max_tags), radius, prev.as_ref()).expect("positive weights and radius");
        if b != bin {
            prev = Some(next);
        } else {
            current = next;
        }
    }
    (prev, current)
}

fn layout_json(l: &CloudLayout) -> String {
    let col = |f: fn(&geotext_core::layout::TagBox) -> f64| array(l.placed.iter().map(|b| coord(f(b))));
    format!(
        "{{\"radius\":{},\"phrases\":{},\"x\":{},\"y\":{},\"w\":{},\"h\":{},\"font\":{},\"dropped\":{}}}",
        coord(l.radius),
        array(l.placed.iter().map(|b| string(&b.phrase))),
        col(|b| b.x),
        col(|b| b.y),
        col(|b| b.width),
        col(|b| b.height),
        col(|b| b.font_size),
        array(l.dropped.iter().map(|p| string(p))),
    )
}

fn diff_json(prev_bin: Option<TimeBin>, d: &CloudDiff) -> String {
    format!(
        "{{\"prev\":{},\"phrases\":{},\"changes\":{}}}",
        prev_bin.map_or("null".to_string(), |b| string(&b.label())),
        array(d.changes.iter().map(|(p, _)| string(p))),
        array(d.changes.iter().map(|(_, t)| string(t.as_str()))),
    )
}

pub fn cloud_body(store: &Store, params: &Params, radius: f64) -> Result<String, ApiError> {
    let bin = bin(store, params)?;
    let site = resolve_site(store, params, bin)?;
    let max_tags = optional_number::<usize>(params, "max_tags")?.unwrap_or(DEFAULT_MAX_TAGS);
    if !(1..=MAX_TAGS).contains(&max_tags) {
        return Err(ApiError::bad_request(format!("max_tags must be 1..={MAX_TAGS}")));
    }
    let cloud = store.query_cloud(site, bin, max_tags);
    let mut body = format!(
        "{{\"site\":{},\"bin\":{},\"tags\":{},\"weights\":{}",
        site_json(site),
        string(&bin.label()),
        array(cloud.iter().map(|t| string(&t.phrase))),
        array(cloud.iter().map(|t| amount3(t.weight))),
    );
    let with_layout = params.get("layout").is_some_and(|v| v == "1" || v == "true");
    if with_layout {
        let (prev, current) = chained_layouts(store, site, bin, max_tags, radius);
        let prev_bin = prev.is_some().then(|| bin.prev());
        let diff = diff_layouts(prev.as_ref().unwrap_or(&CloudLayout::empty(radius)), &current);
        body.push_str(&format!(",\"layout\":{},\"diff\":{}", layout_json(&current), diff_json(prev_bin, &diff)));
    }
    body.push('}');
    Ok(body)
}

pub fn spark_body(store: &Store, params: &Params) -> Result<String, ApiError> {
    let (lat, lon) = (required(params, "lat")?, required(params, "lon")?);
    let site = SiteKey::parse(lat, lon).ok_or_else(|| ApiError::bad_request(format!("bad coordinates {lat},{lon}")))?;
    if !store.has_site(site) {
        return Err(ApiError::not_found(format!("unknown site {lat},{lon}")));
    }
    let phrase = required(params, "phrase")?.trim();
    if phrase.is_empty() {
        return Err(ApiError::bad_request("phrase must not be empty"));
    }
    let series = store.query_spark(site, phrase);
    Ok(format!(
        "{{\"site\":{},\"phrase\":{},\"bins\":{},\"values\":{}}}",
        site_json(site),
        string(phrase),
        array(series.iter().map(|(b, _)| string(&b.label()))),
        array(series.iter().map(|(_, v)| float3(*v))),
    ))
}
