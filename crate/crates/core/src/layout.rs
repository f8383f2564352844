//! Circular tag-cloud layout, layout diffs, marker sizing and SVG output.
//!
//! Canvas coordinates have the origin at the circle center with y growing
//! downward. Box dimensions are rounded up to multiples of 1/256 and the
//! initial free square is snapped inward to that grid, so every edge and
//! corner is exactly representable and overlap and containment tests need
//! no tolerance.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Character cell width as a fraction of font size.
pub const CHAR_WIDTH: f64 = 0.6;
/// Line height as a fraction of font size.
pub const LINE_HEIGHT: f64 = 1.2;
const GRID: f64 = 256.0;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("no weights to size")]
    Empty,
    #[error("weight {0} is not positive")]
    NonPositiveWeight(f64),
    #[error("font range {0}..{1} is invalid")]
    FontRange(f64, f64),
    #[error("radius {0} is not positive")]
    Radius(f64),
    #[error("marker value {0} is not positive")]
    NonPositiveValue(f64),
    #[error("marker value {value} outside {min}..{max}")]
    ValueRange { value: f64, min: f64, max: f64 },
}

fn snap_up(v: f64) -> f64 {
    (v * GRID).ceil() / GRID
}

/// Linear map of weights onto `[s_min, s_max]`; equal weights all get the
/// midpoint.
pub fn size_tags(weights: &[f64], s_min: f64, s_max: f64) -> Result<Vec<f64>, LayoutError> {
    if weights.is_empty() {
        return Err(LayoutError::Empty);
    }
    if !(s_min.is_finite() && s_max.is_finite() && s_min > 0.0 && s_min <= s_max) {
        return Err(LayoutError::FontRange(s_min, s_max));
    }
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(LayoutError::NonPositiveWeight(w));
    }
    let lo = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(vec![(s_min + s_max) / 2.0; weights.len()]);
    }
    Ok(weights.iter().map(|w| s_min + (w - lo) / (hi - lo) * (s_max - s_min)).collect())
}

/// Box size for a phrase at `font_size`, rounded up to the layout grid.
pub fn text_box(phrase: &str, font_size: f64) -> (f64, f64) {
    let chars = phrase.chars().count() as f64;
    (snap_up(CHAR_WIDTH * font_size * chars), snap_up(LINE_HEIGHT * font_size))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudStyle {
    pub font_min: f64,
    pub font_max: f64,
}

impl Default for CloudStyle {
    fn default() -> Self {
        Self {
            font_min: 10.0,
            font_max: 28.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagBox {
    pub phrase: String,
    pub weight: f64,
    pub font_size: f64,
    /// Box center.
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl TagBox {
    pub fn left(&self) -> f64 {
        self.x - self.width / 2.0
    }
    pub fn right(&self) -> f64 {
        self.x + self.width / 2.0
    }
    pub fn top(&self) -> f64 {
        self.y - self.height / 2.0
    }
    pub fn bottom(&self) -> f64 {
        self.y + self.height / 2.0
    }

    /// True when the interiors intersect; touching edges do not count.
    pub fn overlaps(&self, other: &TagBox) -> bool {
        self.left() < other.right() && other.left() < self.right() && self.top() < other.bottom() && other.top() < self.bottom()
    }

    /// All four corners within the circle of `radius` about the origin.
    pub fn inside_circle(&self, radius: f64) -> bool {
        let dx = self.x.abs() + self.width / 2.0;
        let dy = self.y.abs() + self.height / 2.0;
        dx * dx + dy * dy <= radius * radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudLayout {
    pub radius: f64,
    /// In placement order, heaviest first.
    pub placed: Vec<TagBox>,
    /// Phrases with no room left, in weight order.
    pub dropped: Vec<String>,
}

impl CloudLayout {
    pub fn empty(radius: f64) -> Self {
        Self {
            radius,
            placed: Vec::new(),
            dropped: Vec::new(),
        }
    }

    pub fn get(&self, phrase: &str) -> Option<&TagBox> {
        self.placed.iter().find(|b| b.phrase == phrase)
    }
}

#[derive(Debug, Clone, Copy)]
struct FreeRect {
    id: u64,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl FreeRect {
    fn fits(&self, w: f64, h: f64) -> bool {
        self.x1 - self.x0 >= w && self.y1 - self.y0 >= h
    }

    /// Point of the rectangle's feasible center region nearest the origin.
    fn nearest_center(&self, w: f64, h: f64) -> (f64, f64) {
        (
            0f64.clamp(self.x0 + w / 2.0, self.x1 - w / 2.0),
            0f64.clamp(self.y0 + h / 2.0, self.y1 - h / 2.0),
        )
    }
}

struct FreeSpace {
    rects: Vec<FreeRect>,
    next_id: u64,
}

impl FreeSpace {
    fn new(half: f64) -> Self {
        let mut fs = Self {
            rects: Vec::new(),
            next_id: 0,
        };
        fs.add(-half, -half, half, half);
        fs
    }

    fn add(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        if x1 > x0 && y1 > y0 {
            self.rects.push(FreeRect {
                id: self.next_id,
                x0,
                y0,
                x1,
                y1,
            });
        }
        self.next_id += 1;
    }

    /// Replaces rectangle `i` with the strips above and below the box and
    /// the pieces left and right of it at the box's height.
    fn split(&mut self, i: usize, b: &TagBox) {
        let f = self.rects.remove(i);
        let (bx0, by0, bx1, by1) = (b.left(), b.top(), b.right(), b.bottom());
        self.add(f.x0, f.y0, f.x1, by0);
        self.add(f.x0, by1, f.x1, f.y1);
        self.add(f.x0, by0, bx0, by1);
        self.add(bx1, by0, f.x1, by1);
    }
}

/// [`layout_cloud_with`] using the default font range.
pub fn layout_cloud(tags: &[(String, f64)], radius: f64, prev: Option<&CloudLayout>) -> Result<CloudLayout, LayoutError> {
    layout_cloud_with(tags, radius, &CloudStyle::default(), prev)
}

/// Greedy placement in weight order. Each tag goes to the free rectangle
/// whose nearest-to-center feasible point minimizes distance to the center
/// plus distance to the tag's position in `prev`; ties go to the older
/// rectangle. Tags with no feasible rectangle are dropped.
pub fn layout_cloud_with(
    tags: &[(String, f64)],
    radius: f64,
    style: &CloudStyle,
    prev: Option<&CloudLayout>,
) -> Result<CloudLayout, LayoutError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LayoutError::Radius(radius));
    }
    if tags.is_empty() {
        return Ok(CloudLayout::empty(radius));
    }
    let mut order: Vec<&(String, f64)> = tags.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let weights: Vec<f64> = order.iter().map(|t| t.1).collect();
    let sizes = size_tags(&weights, style.font_min, style.font_max)?;

    let prev_pos: HashMap<&str, (f64, f64)> = prev
        .map(|p| p.placed.iter().map(|b| (b.phrase.as_str(), (b.x, b.y))).collect())
        .unwrap_or_default();
    let mut free = FreeSpace::new((radius * GRID).floor() / GRID);
    let mut layout = CloudLayout::empty(radius);

    for ((phrase, weight), font_size) in order.into_iter().map(|(p, w)| (p, *w)).zip(sizes) {
        let (w, h) = text_box(phrase, font_size);
        let anchor = prev_pos.get(phrase.as_str()).copied();
        let mut best: Option<(f64, u64, usize, TagBox)> = None;
        for (i, r) in free.rects.iter().enumerate() {
            if !r.fits(w, h) {
                continue;
            }
            let (x, y) = r.nearest_center(w, h);
            let candidate = TagBox {
                phrase: phrase.clone(),
                weight,
                font_size,
                x,
                y,
                width: w,
                height: h,
            };
            if !candidate.inside_circle(radius) {
                continue;
            }
            let cost = x.hypot(y) + anchor.map_or(0.0, |(px, py)| (x - px).hypot(y - py));
            let better = match &best {
                None => true,
                Some((c, id, _, _)) => cost < *c || (cost == *c && r.id < *id),
            };
            if better {
                best = Some((cost, r.id, i, candidate));
            }
        }
        match best {
            Some((_, _, i, b)) => {
                free.split(i, &b);
                layout.placed.push(b);
            }
            None => layout.dropped.push(phrase.clone()),
        }
    }
    Ok(layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    /// Newly shown; rendered with the phosphor effect.
    Enter,
    Exit,
    Promoted,
    Demoted,
    Steady,
}

impl Transition {
    pub fn as_str(self) -> &'static str {
        match self {
            Transition::Enter => "enter",
            Transition::Exit => "exit",
            Transition::Promoted => "promoted",
            Transition::Demoted => "demoted",
            Transition::Steady => "steady",
        }
    }
}

/// One transition per phrase shown in either layout, ordered by phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudDiff {
    pub changes: Vec<(String, Transition)>,
}

impl CloudDiff {
    pub fn get(&self, phrase: &str) -> Option<Transition> {
        self.changes.iter().find(|(p, _)| p == phrase).map(|(_, t)| *t)
    }
}

/// Compares the placed tags of two layouts. Dropped tags are not visible
/// and count as absent.
pub fn diff_layouts(prev: &CloudLayout, next: &CloudLayout) -> CloudDiff {
    let mut by_phrase: BTreeMap<&str, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for b in &prev.placed {
        by_phrase.entry(&b.phrase).or_default().0 = Some(b.weight);
    }
    for b in &next.placed {
        by_phrase.entry(&b.phrase).or_default().1 = Some(b.weight);
    }
    let changes = by_phrase
        .into_iter()
        .map(|(p, ws)| {
            let t = match ws {
                (None, _) => Transition::Enter,
                (_, None) => Transition::Exit,
                (Some(a), Some(b)) if b > a => Transition::Promoted,
                (Some(a), Some(b)) if b < a => Transition::Demoted,
                _ => Transition::Steady,
            };
            (p.to_string(), t)
        })
        .collect();
    CloudDiff { changes }
}

/// Marker radius on a log scale between `r_min` and `r_max`.
pub fn marker_radius(value: f64, v_min: f64, v_max: f64, r_min: f64, r_max: f64) -> Result<f64, LayoutError> {
    if value.is_nan() || value <= 0.0 {
        return Err(LayoutError::NonPositiveValue(value));
    }
    if !(v_min > 0.0 && v_min <= value && value <= v_max) {
        return Err(LayoutError::ValueRange {
            value,
            min: v_min,
            max: v_max,
        });
    }
    if v_min == v_max {
        return Ok((r_min + r_max) / 2.0);
    }
    Ok(r_min + (r_max - r_min) * (value.ln() - v_min.ln()) / (v_max.ln() - v_min.ln()))
}

/// Marker magnification relative to `reference_zoom`: half the map's rate
/// in log space, so `2^((zoom - reference_zoom) / 2)`.
pub fn marker_zoom_scale(zoom: f64, reference_zoom: f64) -> f64 {
    2f64.powf((zoom - reference_zoom) / 2.0)
}

fn num(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// SVG 1.1 document: the circle outline, one text element per tag at its
/// box center, and an optional sparkline stretched over each tag's box.
pub fn render_svg(layout: &CloudLayout, spark: Option<&BTreeMap<String, Vec<f64>>>) -> String {
    let r = num(layout.radius);
    let d = num(2.0 * layout.radius);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="-{r} -{r} {d} {d}" width="{d}" height="{d}">"#
    );
    let _ = writeln!(s, r##"<circle cx="0" cy="0" r="{r}" fill="none" stroke="#888888"/>"##);
    for b in &layout.placed {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="middle" dominant-baseline="central">{}</text>"#,
            num(b.x),
            num(b.y),
            num(b.font_size),
            escape(&b.phrase)
        );
        let Some(series) = spark.and_then(|m| m.get(&b.phrase)) else {
            continue;
        };
        if series.is_empty() {
            continue;
        }
        let n = series.len();
        let points: Vec<String> = series
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = if n == 1 { b.x } else { b.left() + b.width * i as f64 / (n - 1) as f64 };
                let y = b.bottom() - v.clamp(0.0, 1.0) * b.height;
                format!("{},{}", num(x), num(y))
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#cc3333" stroke-width="1"/>"##,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
