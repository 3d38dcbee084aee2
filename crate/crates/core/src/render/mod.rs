//! Chart rendering with exact annotations.
//!
//! [`render`] draws a table as one of the seven chart types and records, next
//! to the pixels, a [`MarkAnnotation`] for every numeric cell and a
//! [`TextAnnotation`] for every piece of text it drew. Annotation geometry is
//! kept in fractional pixels; the raster is the rounded rendering of it.
//!
//! Value axes: bars use `[min(0, 1.1 min), max(0, 1.1 max)]`, lines and
//! scatter plots the data range padded by 5%, both widened to nice ticks.

mod axis;
mod style;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::raster::{text_width, Mask, RgbaImage, GLYPH};
use crate::table::{parse_number, recommend_chart, ChartType, DataTable};
use axis::{bar_range, padded_range, Ticks};
use style::Style;

pub const MIN_SIDE_PX: u32 = 128;
/// Floor for relative-error denominators.
pub const REL_EPS: f64 = 1e-9;

const PAD: f64 = 8.0;
const MARKER: f64 = 6.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RenderError {
    #[error("invalid chart spec: {0}")]
    InvalidSpec(String),
    #[error("labels do not fit: {0}")]
    RenderOverflow(String),
    #[error("unsupported table/chart combination: {0}")]
    UnsupportedCombination(String),
    #[error("value cannot be recovered from geometry: {0}")]
    NotInvertible(String),
    #[error("mark does not belong to this chart")]
    MarkNotInChart,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.w >= 0.0 && self.h >= 0.0 && self.right() <= width && self.bottom() <= height
    }

    pub fn union(&self, o: &BBox) -> BBox {
        let x = self.x.min(o.x);
        let y = self.y.min(o.y);
        BBox::new(x, y, self.right().max(o.right()) - x, self.bottom().max(o.bottom()) - y)
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.x && p.0 <= self.right() && p.1 >= self.y && p.1 <= self.bottom()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRole {
    Title,
    XTick,
    YTick,
    AxisLabel,
    LegendEntry,
    DataLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextAnnotation {
    pub content: String,
    pub bbox: BBox,
    pub role: TextRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MarkGeometry {
    /// Vertical bar (or stacked segment); the value is its height.
    Bar,
    /// Line vertex or scatter point at the bbox center.
    Point,
    /// Pie slice; angles in degrees, clockwise from 12 o'clock.
    Wedge {
        center_x: f64,
        center_y: f64,
        radius: f64,
        start_deg: f64,
        sweep_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkAnnotation {
    pub series: String,
    pub category: String,
    pub value: f64,
    pub bbox: BBox,
    pub geometry: MarkGeometry,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AxisLabels {
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub chart_type: ChartType,
    pub width_px: u32,
    pub height_px: u32,
    pub title: String,
    pub axis_labels: AxisLabels,
    pub legend: Vec<String>,
    pub style_seed: u64,
    /// Print each value next to its mark.
    #[serde(default)]
    pub data_labels: bool,
}

impl ChartSpec {
    /// Spec with title, axis labels and legend taken from the table.
    pub fn for_table(t: &DataTable, chart_type: ChartType, width_px: u32, height_px: u32, style_seed: u64) -> Self {
        let series = t.series();
        let (axis_labels, legend) = if chart_type == ChartType::Pie {
            (AxisLabels::default(), Vec::new())
        } else if chart_type.is_multi_series() {
            (
                AxisLabels {
                    x: t.category_label().to_string(),
                    y: String::new(),
                },
                series.iter().map(|s| s.name.to_string()).collect(),
            )
        } else {
            (
                AxisLabels {
                    x: t.category_label().to_string(),
                    y: series.first().map(|s| s.name.to_string()).unwrap_or_default(),
                },
                Vec::new(),
            )
        };
        ChartSpec {
            chart_type,
            width_px,
            height_px,
            title: t.title().to_string(),
            axis_labels,
            legend,
            style_seed,
            data_labels: false,
        }
    }

    pub fn with_data_labels(mut self, on: bool) -> Self {
        self.data_labels = on;
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width_px < MIN_SIDE_PX || self.height_px < MIN_SIDE_PX {
            return Err(RenderError::InvalidSpec(format!(
                "{}x{} is below the {MIN_SIDE_PX}px minimum",
                self.width_px, self.height_px
            )));
        }
        if self.chart_type.is_multi_series() == self.legend.is_empty() {
            return Err(RenderError::InvalidSpec(format!(
                "{} charts {} a legend",
                self.chart_type,
                if self.legend.is_empty() { "need" } else { "take no" }
            )));
        }
        Ok(())
    }
}

/// Everything about a rendered chart except its pixels; this is what the
/// `.anno.json` sidecar holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartAnnotations {
    pub source_table_id: String,
    pub spec: ChartSpec,
    pub marks: Vec<MarkAnnotation>,
    pub texts: Vec<TextAnnotation>,
    /// Sum of slice values for pie charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pie_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedChart {
    pub image: RgbaImage,
    pub annotations: ChartAnnotations,
}

impl RenderedChart {
    pub fn spec(&self) -> &ChartSpec {
        &self.annotations.spec
    }

    pub fn marks(&self) -> &[MarkAnnotation] {
        &self.annotations.marks
    }

    pub fn texts(&self) -> &[TextAnnotation] {
        &self.annotations.texts
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    /// Writes `path` (PNG) and `path` + `.anno.json`.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.image.encode_png())?;
        let json = serde_json::to_string_pretty(&self.annotations).map_err(io::Error::other)?;
        fs::write(sidecar_path(path), json)
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let image = RgbaImage::decode_png(&fs::read(path)?)?;
        let text = fs::read_to_string(sidecar_path(path))?;
        let annotations = serde_json::from_str(&text).map_err(io::Error::other)?;
        Ok(RenderedChart { image, annotations })
    }
}

pub fn sidecar_path(image_path: &Path) -> PathBuf {
    let mut s = image_path.as_os_str().to_os_string();
    s.push(".anno.json");
    PathBuf::from(s)
}

/// Stable content fingerprint of a table (FNV-1a over its JSON form).
pub fn table_id(t: &DataTable) -> String {
    let json = serde_json::to_vec(t).expect("table serializes");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in json {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Like [`render`], but on `RenderOverflow` widens the canvas in 25% steps
/// (up to 4x the requested width) until the labels fit.
pub fn render_fitted(t: &DataTable, spec: &ChartSpec) -> Result<RenderedChart, RenderError> {
    let mut spec = spec.clone();
    let max_w = spec.width_px.saturating_mul(4);
    loop {
        match render(t, &spec) {
            Err(RenderError::RenderOverflow(_)) if spec.width_px < max_w => {
                spec.width_px = (spec.width_px + spec.width_px / 4).min(max_w);
            }
            r => return r,
        }
    }
}

/// Short value text used for data labels.
fn value_text(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

struct Canvas {
    image: RgbaImage,
    texts: Vec<TextAnnotation>,
    marks: Vec<MarkAnnotation>,
    style: Style,
    w: f64,
    h: f64,
}

impl Canvas {
    fn text(&mut self, content: &str, x: f64, y: f64, scale: u32, role: TextRole) {
        if content.trim().is_empty() {
            return;
        }
        let tw = text_width(content, scale);
        let th = (GLYPH * scale) as f64;
        let x = x.clamp(0.0, (self.w - tw).max(0.0));
        let mut y = y.clamp(0.0, (self.h - th).max(0.0));
        // distinct texts never share a box
        for _ in 0..8 {
            let b = BBox::new(x, y, tw, th);
            if !self.texts.iter().any(|t| t.bbox == b) {
                break;
            }
            y = if y + 2.0 * th + 2.0 <= self.h { y + th + 2.0 } else { (y - th - 2.0).max(0.0) };
        }
        self.image.draw_text(content, x, y, scale, self.style.text);
        self.texts.push(TextAnnotation {
            content: content.to_string(),
            bbox: BBox::new(x, y, tw, th),
            role,
        });
    }
}

pub fn render(t: &DataTable, spec: &ChartSpec) -> Result<RenderedChart, RenderError> {
    spec.validate()?;
    let recs = recommend_chart(t).map_err(|e| RenderError::UnsupportedCombination(e.to_string()))?;
    if !recs.iter().any(|r| r.chart_type == spec.chart_type) {
        return Err(RenderError::UnsupportedCombination(format!(
            "{} is not applicable to this table",
            spec.chart_type
        )));
    }
    if spec.chart_type.is_multi_series() {
        let names: Vec<&str> = t.series().iter().map(|s| s.name).collect();
        if spec.legend.iter().map(String::as_str).ne(names.iter().copied()) {
            return Err(RenderError::InvalidSpec("legend must list the table's series in order".into()));
        }
    }
    let style = Style::from_seed(spec.style_seed);
    let mut canvas = Canvas {
        image: RgbaImage::new(spec.width_px, spec.height_px, style.background),
        texts: Vec::new(),
        marks: Vec::new(),
        style,
        w: spec.width_px as f64,
        h: spec.height_px as f64,
    };
    let pie_total = if spec.chart_type == ChartType::Pie {
        Some(draw_pie(&mut canvas, t, spec)?)
    } else {
        draw_cartesian(&mut canvas, t, spec)?;
        None
    };
    Ok(RenderedChart {
        image: canvas.image,
        annotations: ChartAnnotations {
            source_table_id: table_id(t),
            spec: spec.clone(),
            marks: canvas.marks,
            texts: canvas.texts,
            pie_total,
        },
    })
}

/// Draws the title and returns the y coordinate below it.
fn draw_title(c: &mut Canvas, title: &str) -> Result<f64, RenderError> {
    if title.trim().is_empty() {
        return Ok(PAD);
    }
    let avail = c.w - 2.0 * PAD;
    let scale = if text_width(title, 2) <= avail {
        2
    } else if text_width(title, 1) <= avail {
        1
    } else {
        return Err(RenderError::RenderOverflow(format!("title {title:?}")));
    };
    let x = (c.w - text_width(title, scale)) / 2.0;
    c.text(title, x, PAD, scale, TextRole::Title);
    Ok(PAD + (GLYPH * scale) as f64 + 6.0)
}

fn draw_legend(c: &mut Canvas, names: &[String], top: f64) -> Result<f64, RenderError> {
    if names.is_empty() {
        return Ok(top);
    }
    let avail = c.w - 2.0 * PAD;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut used = 0.0;
    for (i, n) in names.iter().enumerate() {
        let ew = 10.0 + text_width(n, 1);
        if ew > avail {
            return Err(RenderError::RenderOverflow(format!("legend entry {n:?}")));
        }
        let need = if used == 0.0 { ew } else { used + 12.0 + ew };
        if need > avail {
            rows.push(Vec::new());
            used = ew;
        } else {
            used = need;
        }
        rows.last_mut().unwrap().push((i, ew));
    }
    if rows.len() > 3 {
        return Err(RenderError::RenderOverflow("legend needs more than 3 rows".into()));
    }
    let mut y = top;
    for row in rows {
        let mut x = PAD;
        for (i, ew) in row {
            let color = c.style.series_color(i);
            c.image.fill_rect(x, y, x + 8.0, y + 8.0, color);
            c.text(&names[i], x + 10.0, y, 1, TextRole::LegendEntry);
            x += ew + 12.0;
        }
        y += 12.0;
    }
    Ok(y + 2.0)
}

struct ValueAxis {
    ticks: Ticks,
    top: f64,
    bottom: f64,
}

impl ValueAxis {
    fn y(&self, v: f64) -> f64 {
        let (lo, hi) = (self.ticks.lo(), self.ticks.hi());
        self.bottom - (v - lo) / (hi - lo) * (self.bottom - self.top)
    }
}

fn draw_cartesian(c: &mut Canvas, t: &DataTable, spec: &ChartSpec) -> Result<(), RenderError> {
    let series = t.series();
    let categories = t.categories();
    let kind = spec.chart_type;

    let mut top = draw_title(c, &spec.title)?;
    top = draw_legend(c, &spec.legend, top)?;
    for label in [&spec.axis_labels.x, &spec.axis_labels.y] {
        if text_width(label, 1) > c.w - 2.0 * PAD {
            return Err(RenderError::RenderOverflow(format!("axis label {label:?}")));
        }
    }
    if !spec.axis_labels.y.trim().is_empty() {
        c.text(&spec.axis_labels.y, PAD, top, 1, TextRole::AxisLabel);
        top += 12.0;
    }
    let plot_top = top + 6.0;
    let mut bottom = c.h - PAD;
    if !spec.axis_labels.x.trim().is_empty() {
        bottom -= GLYPH as f64;
        let x = (c.w - text_width(&spec.axis_labels.x, 1)) / 2.0;
        c.text(&spec.axis_labels.x, x, bottom, 1, TextRole::AxisLabel);
        bottom -= 4.0;
    }
    let x_tick_y = bottom - GLYPH as f64;
    let plot_bottom = x_tick_y - 6.0;
    if plot_bottom - plot_top < 40.0 {
        return Err(RenderError::RenderOverflow("plot area too short".into()));
    }

    // value range
    let values: Vec<f64> = if kind == ChartType::StackedBar {
        categories
            .iter()
            .map(|cat| series.iter().filter_map(|s| s.points.iter().find(|p| p.0 == cat.as_str())).map(|p| p.1).sum())
            .collect()
    } else {
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect()
    };
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if kind.is_bar_family() { bar_range(vmin, vmax) } else { padded_range(vmin, vmax) };
    let target = (((plot_bottom - plot_top) / 40.0) as usize).clamp(2, 8);
    let axis = ValueAxis {
        ticks: Ticks::covering(lo, hi, target),
        top: plot_top,
        bottom: plot_bottom,
    };
    let tick_labels: Vec<(f64, String)> = axis.ticks.values().map(|v| (v, axis.ticks.label(v))).collect();
    let label_w = tick_labels.iter().map(|(_, s)| text_width(s, 1)).fold(0.0, f64::max);
    let plot_left = PAD + label_w + 6.0;

    // scatter x axis
    let x_numeric: Option<(Vec<f64>, Ticks)> = if kind == ChartType::Scatter {
        let xs: Vec<f64> = categories
            .iter()
            .map(|c| parse_number(c).map(|p| p.0))
            .collect::<Option<_>>()
            .ok_or_else(|| RenderError::UnsupportedCombination("scatter needs numeric categories".into()))?;
        let (xlo, xhi) = padded_range(
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let est_w = c.w - plot_left - PAD;
        Some((xs, Ticks::covering(xlo, xhi, ((est_w / 80.0) as usize).clamp(2, 8))))
    } else {
        None
    };
    let right_margin = match &x_numeric {
        Some((_, ticks)) => ticks.values().map(|v| text_width(&ticks.label(v), 1) / 2.0).fold(4.0, f64::max),
        None => 4.0,
    };
    let plot_right = c.w - PAD - right_margin;
    let plot_w = plot_right - plot_left;
    if plot_w < 40.0 {
        return Err(RenderError::RenderOverflow("plot area too narrow".into()));
    }

    // grid, axes, y ticks
    for (v, label) in &tick_labels {
        let y = axis.y(*v);
        if let Some(grid) = c.style.grid {
            c.image.fill_rect(plot_left, y - 0.5, plot_right, y + 0.5, grid);
        }
        let w = text_width(label, 1);
        c.text(label, plot_left - 6.0 - w, y - GLYPH as f64 / 2.0, 1, TextRole::YTick);
    }
    let axis_color = c.style.axis;
    c.image.fill_rect(plot_left - 1.0, plot_top, plot_left, plot_bottom + 1.0, axis_color);
    c.image.fill_rect(plot_left - 1.0, plot_bottom, plot_right, plot_bottom + 1.0, axis_color);

    // x positions
    let x_of: Vec<f64> = match &x_numeric {
        Some((xs, ticks)) => {
            let (xlo, xhi) = (ticks.lo(), ticks.hi());
            let map = |v: f64| plot_left + (v - xlo) / (xhi - xlo) * plot_w;
            let positions: Vec<(f64, String)> = ticks.values().map(|v| (map(v), ticks.label(v))).collect();
            for w in positions.windows(2) {
                let need = (text_width(&w[0].1, 1) + text_width(&w[1].1, 1)) / 2.0 + 4.0;
                if w[1].0 - w[0].0 < need {
                    return Err(RenderError::RenderOverflow("x tick labels overlap".into()));
                }
            }
            for (x, label) in positions {
                c.text(&label, x - text_width(&label, 1) / 2.0, x_tick_y, 1, TextRole::XTick);
            }
            xs.iter().map(|v| map(*v)).collect()
        }
        None => {
            let slot = plot_w / categories.len() as f64;
            let mut xs = Vec::with_capacity(categories.len());
            for (i, cat) in categories.iter().enumerate() {
                let cx = plot_left + (i as f64 + 0.5) * slot;
                let w = text_width(cat, 1);
                if w > slot - 2.0 {
                    return Err(RenderError::RenderOverflow(format!("x tick {cat:?} wider than its slot")));
                }
                c.text(cat, cx - w / 2.0, x_tick_y, 1, TextRole::XTick);
                xs.push(cx);
            }
            xs
        }
    };
    let slot = plot_w / categories.len() as f64;
    let cat_index = |name: &str| categories.iter().position(|c| c == name).expect("category of table");

    if kind.is_bar_family() {
        let group_w = slot * 0.7;
        let ns = series.len();
        let bar_w = if kind == ChartType::GroupedBar { group_w / ns as f64 } else { group_w };
        if bar_w < 2.0 {
            return Err(RenderError::RenderOverflow("bars narrower than 2px".into()));
        }
        let zero = axis.y(0.0);
        let mut stack_base = vec![0.0f64; categories.len()];
        for (si, s) in series.iter().enumerate() {
            let color = c.style.series_color(si);
            for &(cat, v) in &s.points {
                let ci = cat_index(cat);
                let left = x_of[ci] - group_w / 2.0 + if kind == ChartType::GroupedBar { si as f64 * bar_w } else { 0.0 };
                let (y0, y1) = if kind == ChartType::StackedBar {
                    let base = stack_base[ci];
                    stack_base[ci] += v;
                    (axis.y(base + v), axis.y(base))
                } else {
                    let yv = axis.y(v);
                    (yv.min(zero), yv.max(zero))
                };
                let bbox = BBox::new(left, y0, bar_w, y1 - y0);
                let inset = if kind == ChartType::GroupedBar && bar_w > 4.0 { 0.5 } else { 0.0 };
                c.image.fill_rect(bbox.x + inset, bbox.y, bbox.right() - inset, bbox.bottom(), color);
                c.marks.push(MarkAnnotation {
                    series: s.name.to_string(),
                    category: cat.to_string(),
                    value: v,
                    bbox,
                    geometry: MarkGeometry::Bar,
                });
            }
        }
    } else {
        for (si, s) in series.iter().enumerate() {
            let color = c.style.series_color(si);
            let pts: Vec<(usize, f64, f64)> = s
                .points
                .iter()
                .map(|&(cat, v)| {
                    let ci = cat_index(cat);
                    (ci, x_of[ci], axis.y(v))
                })
                .collect();
            let mut mask = Mask::new(c.image.width(), c.image.height());
            if kind != ChartType::Scatter {
                for w in pts.windows(2) {
                    // gaps in the series break the line
                    if w[1].0 == w[0].0 + 1 {
                        mask.stroke_segment((w[0].1, w[0].2), (w[1].1, w[1].2), 2.0);
                    }
                }
            }
            for &(_, x, y) in &pts {
                mask.fill_disk((x, y), MARKER / 2.0);
            }
            c.image.fill_mask(&mask, color);
            for (&(cat, v), &(_, x, y)) in s.points.iter().zip(&pts) {
                c.marks.push(MarkAnnotation {
                    series: s.name.to_string(),
                    category: cat.to_string(),
                    value: v,
                    bbox: BBox::new(x - MARKER / 2.0, y - MARKER / 2.0, MARKER, MARKER),
                    geometry: MarkGeometry::Point,
                });
            }
        }
    }

    if spec.data_labels {
        let marks = c.marks.clone();
        for m in &marks {
            let text = value_text(m.value);
            let w = text_width(&text, 1);
            let (cx, _) = m.bbox.center();
            let y = if m.value < 0.0 && matches!(m.geometry, MarkGeometry::Bar) {
                m.bbox.bottom() + 2.0
            } else {
                m.bbox.y - GLYPH as f64 - 2.0
            };
            c.text(&text, cx - w / 2.0, y, 1, TextRole::DataLabel);
        }
    }
    Ok(())
}

/// Point on a circle at `deg` degrees clockwise from 12 o'clock.
fn polar(cx: f64, cy: f64, r: f64, deg: f64) -> (f64, f64) {
    let a = deg.to_radians();
    (cx + r * a.sin(), cy - r * a.cos())
}

fn wedge_bbox(cx: f64, cy: f64, r: f64, start: f64, sweep: f64) -> BBox {
    let mut pts = vec![(cx, cy), polar(cx, cy, r, start), polar(cx, cy, r, start + sweep)];
    for k in 0..8 {
        let a = k as f64 * 90.0;
        if a > start && a < start + sweep {
            pts.push(polar(cx, cy, r, a));
        }
    }
    let x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if sweep == 0.0 {
        // an empty slice has no area; pin it to its point on the rim
        let (px, py) = polar(cx, cy, r, start);
        return BBox::new(px, py, 0.0, 0.0);
    }
    BBox::new(x0, y0, x1 - x0, y1 - y0)
}

fn draw_pie(c: &mut Canvas, t: &DataTable, spec: &ChartSpec) -> Result<f64, RenderError> {
    let series = t.series();
    let s = &series[0];
    if s.points.iter().any(|p| p.1 < 0.0) {
        return Err(RenderError::UnsupportedCombination("pie with negative values".into()));
    }
    let total: f64 = s.points.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return Err(RenderError::UnsupportedCombination("pie with zero total".into()));
    }
    let top = draw_title(c, &spec.title)?;
    let label_w = s.points.iter().map(|p| text_width(p.0, 1)).fold(0.0, f64::max);
    let area_h = c.h - PAD - top;
    let r = ((c.w - 2.0 * PAD) / 2.0 - label_w - 10.0).min(area_h / 2.0 - 14.0);
    if r < 20.0 {
        return Err(RenderError::RenderOverflow("pie radius below 20px".into()));
    }
    let (cx, cy) = (c.w / 2.0, top + area_h / 2.0);

    let mut slices = Vec::with_capacity(s.points.len());
    let mut start = 0.0;
    for &(cat, v) in &s.points {
        let sweep = 360.0 * v / total;
        slices.push((cat, v, start, sweep));
        start += sweep;
    }

    // paint by angle
    let x0 = (cx - r).floor().max(0.0) as u32;
    let x1 = ((cx + r).ceil() as u32).min(c.image.width());
    let y0 = (cy - r).floor().max(0.0) as u32;
    let y1 = ((cy + r).ceil() as u32).min(c.image.height());
    for py in y0..y1 {
        for px in x0..x1 {
            let dx = px as f64 + 0.5 - cx;
            let dy = py as f64 + 0.5 - cy;
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let mut a = dx.atan2(-dy).to_degrees();
            if a < 0.0 {
                a += 360.0;
            }
            if let Some(i) = slices.iter().position(|&(_, _, st, sw)| sw > 0.0 && a >= st && a < st + sw) {
                let color = c.style.series_color(i);
                c.image.put(px, py, color);
            }
        }
    }

    for &(cat, v, start, sweep) in &slices {
        c.marks.push(MarkAnnotation {
            series: s.name.to_string(),
            category: cat.to_string(),
            value: v,
            bbox: wedge_bbox(cx, cy, r, start, sweep),
            geometry: MarkGeometry::Wedge {
                center_x: cx,
                center_y: cy,
                radius: r,
                start_deg: start,
                sweep_deg: sweep,
            },
        });
        let mid = start + sweep / 2.0;
        let (lx, ly) = polar(cx, cy, r + 6.0, mid);
        let w = text_width(cat, 1);
        let x = if mid.to_radians().sin() >= 0.0 { lx } else { lx - w };
        c.text(cat, x, ly - GLYPH as f64 / 2.0, 1, TextRole::XTick);
        if spec.data_labels {
            let text = value_text(v);
            let (vx, vy) = polar(cx, cy, r * 0.6, mid);
            c.text(&text, vx - text_width(&text, 1) / 2.0, vy - GLYPH as f64 / 2.0, 1, TextRole::DataLabel);
        }
    }
    Ok(total)
}

/// Recovers a mark's data value from pixel geometry: bar extents and point
/// positions are read against the y-tick labels, pie slices by their sweep.
pub fn extract_value_from_mark(c: &RenderedChart, m: &MarkAnnotation) -> Result<f64, RenderError> {
    if !c.marks().iter().any(|x| x == m) {
        return Err(RenderError::MarkNotInChart);
    }
    match &m.geometry {
        MarkGeometry::Wedge { sweep_deg, .. } => {
            let total = c
                .annotations
                .pie_total
                .filter(|t| *t > 0.0)
                .ok_or_else(|| RenderError::NotInvertible("pie without a positive total".into()))?;
            Ok(sweep_deg / 360.0 * total)
        }
        geometry => {
            let (y_ref, v_ref, per_px) = tick_calibration(c)?;
            let value_at = |y: f64| v_ref + (y_ref - y) * per_px;
            match geometry {
                MarkGeometry::Point => Ok(value_at(m.bbox.center().1)),
                _ => {
                    if m.bbox.h == 0.0 {
                        return Ok(0.0);
                    }
                    let magnitude = m.bbox.h * per_px;
                    let zero_y = y_ref + v_ref / per_px;
                    Ok(if m.bbox.center().1 <= zero_y { magnitude } else { -magnitude })
                }
            }
        }
    }
}

/// (pixel y, value at that y, value per pixel upward) from the outermost
/// y-tick labels.
fn tick_calibration(c: &RenderedChart) -> Result<(f64, f64, f64), RenderError> {
    let mut ticks: Vec<(f64, f64)> = c
        .texts()
        .iter()
        .filter(|t| t.role == TextRole::YTick)
        .filter_map(|t| parse_number(&t.content).map(|(v, _)| (t.bbox.center().1, v)))
        .collect();
    ticks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (Some(&(y_top, v_top)), Some(&(y_bot, v_bot))) = (ticks.first(), ticks.last()) else {
        return Err(RenderError::NotInvertible("no y-axis ticks".into()));
    };
    if y_bot - y_top <= 0.0 || v_top == v_bot {
        return Err(RenderError::NotInvertible("y-axis ticks do not span a range".into()));
    }
    Ok((y_bot, v_bot, (v_top - v_bot) / (y_bot - y_top)))
}

#[cfg(test)]
mod tests;
