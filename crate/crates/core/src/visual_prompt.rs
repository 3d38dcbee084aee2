//! Visual prompts: arrows, ellipses, boxes, triangles and scribbles drawn
//! over a chart element and alpha-blended into the image.
//!
//! Geometry rules, given the target element's bounding box:
//! * arrow: head at the box center (always inside the image, i.e. inside
//!   `[-W/2, W/2] x [-H/2, H/2]` in centered coordinates), tail on the image border;
//! * ellipse: centered on the box, semi-axes are the box half-extents times a
//!   ratio in `[1, 1.5]`;
//! * triangle: three uniform points inside the box;
//! * scribble: quadratic Bezier whose three control points lie inside the box;
//! * bounding box: the box outline itself.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::raster::{Mask, Rgba, RgbaImage};
use crate::render::{BBox, RenderedChart};

/// High-contrast prompt colors.
pub const PROMPT_PALETTE: [Rgba; 8] = [
    [255, 0, 0, 255],
    [0, 200, 0, 255],
    [0, 0, 255, 255],
    [255, 215, 0, 255],
    [255, 0, 255, 255],
    [0, 255, 255, 255],
    [255, 128, 0, 255],
    [0, 0, 0, 255],
];

pub const ELLIPSE_RATIO: (f64, f64) = (1.0, 1.5);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PromptError {
    #[error("target box has zero area")]
    DegenerateBBox,
    #[error("target box lies outside the {0}x{1} image")]
    OutOfBounds(u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Arrow,
    Ellipse,
    BoundingBox,
    Triangle,
    Scribble,
}

impl PromptKind {
    /// The set sampled by default.
    pub const DEFAULT_SET: [PromptKind; 4] =
        [PromptKind::Arrow, PromptKind::Ellipse, PromptKind::BoundingBox, PromptKind::Triangle];
    pub const ALL: [PromptKind; 5] = [
        PromptKind::Arrow,
        PromptKind::Ellipse,
        PromptKind::BoundingBox,
        PromptKind::Triangle,
        PromptKind::Scribble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Arrow => "arrow",
            PromptKind::Ellipse => "ellipse",
            PromptKind::BoundingBox => "bounding_box",
            PromptKind::Triangle => "triangle",
            PromptKind::Scribble => "scribble",
        }
    }
}

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptGeometry {
    Arrow { tail: Point, head: Point },
    Ellipse { center: Point, semi_axes: (f64, f64), ratio: f64 },
    BoundingBox { bbox: BBox },
    Triangle { vertices: [Point; 3] },
    Scribble { anchors: [Point; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualPrompt {
    pub kind: PromptKind,
    pub geometry: PromptGeometry,
    pub color: Rgba,
    pub alpha: f64,
    pub thickness: f64,
    pub target_bbox: BBox,
    pub image_size: (u32, u32),
}

impl VisualPrompt {
    /// Arrow head relative to the image center.
    pub fn arrow_head_centered(&self) -> Option<Point> {
        match self.geometry {
            PromptGeometry::Arrow { head, .. } => {
                let (w, h) = self.image_size;
                Some((head.0 - w as f64 / 2.0, head.1 - h as f64 / 2.0))
            }
            _ => None,
        }
    }

    /// Checks the kind-specific geometric rule.
    pub fn satisfies_invariant(&self) -> bool {
        let b = &self.target_bbox;
        let (w, h) = (self.image_size.0 as f64, self.image_size.1 as f64);
        match &self.geometry {
            PromptGeometry::Arrow { .. } => {
                let (x, y) = self.arrow_head_centered().expect("arrow");
                (-w / 2.0..=w / 2.0).contains(&x) && (-h / 2.0..=h / 2.0).contains(&y)
            }
            PromptGeometry::Ellipse { center, semi_axes, ratio } => {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
                (ELLIPSE_RATIO.0..=ELLIPSE_RATIO.1).contains(ratio)
                    && close(semi_axes.0, b.w / 2.0 * ratio)
                    && close(semi_axes.1, b.h / 2.0 * ratio)
                    && close(center.0, b.center().0)
                    && close(center.1, b.center().1)
            }
            PromptGeometry::BoundingBox { bbox } => bbox == b,
            PromptGeometry::Triangle { vertices } => vertices.iter().all(|p| b.contains(*p)),
            PromptGeometry::Scribble { anchors } => anchors.iter().all(|p| b.contains(*p)),
        }
    }

    /// Pixels the prompt paints.
    pub fn footprint(&self) -> Mask {
        let (w, h) = self.image_size;
        let mut m = Mask::new(w, h);
        let t = self.thickness;
        match &self.geometry {
            PromptGeometry::Arrow { tail, head } => {
                m.stroke_segment(*tail, *head, t);
                let (dx, dy) = (tail.0 - head.0, tail.1 - head.1);
                let len = (dx * dx + dy * dy).sqrt();
                if len > 0.0 {
                    let wing = (0.3 * len).min(14.0);
                    for angle in [0.45f64, -0.45] {
                        let (s, c) = angle.sin_cos();
                        let ux = (dx * c - dy * s) / len;
                        let uy = (dx * s + dy * c) / len;
                        m.stroke_segment(*head, (head.0 + ux * wing, head.1 + uy * wing), t);
                    }
                }
            }
            PromptGeometry::Ellipse { center, semi_axes, .. } => {
                let pts: Vec<Point> = (0..128)
                    .map(|i| {
                        let a = i as f64 / 128.0 * std::f64::consts::TAU;
                        (center.0 + semi_axes.0 * a.cos(), center.1 + semi_axes.1 * a.sin())
                    })
                    .collect();
                m.stroke_polyline(&pts, t, true);
            }
            PromptGeometry::BoundingBox { bbox } => {
                let pts = [
                    (bbox.x, bbox.y),
                    (bbox.right(), bbox.y),
                    (bbox.right(), bbox.bottom()),
                    (bbox.x, bbox.bottom()),
                ];
                m.stroke_polyline(&pts, t, true);
            }
            PromptGeometry::Triangle { vertices } => m.stroke_polyline(vertices, t, true),
            PromptGeometry::Scribble { anchors } => {
                m.stroke_polyline(&bezier_points(anchors, 64), t, false);
            }
        }
        m
    }
}

/// Samples a quadratic Bezier curve at `n + 1` evenly spaced parameters.
pub fn bezier_points(ctrl: &[Point; 3], n: usize) -> Vec<Point> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let (a, b, c) = ((1.0 - t) * (1.0 - t), 2.0 * (1.0 - t) * t, t * t);
            (
                a * ctrl[0].0 + b * ctrl[1].0 + c * ctrl[2].0,
                a * ctrl[0].1 + b * ctrl[1].1 + c * ctrl[2].1,
            )
        })
        .collect()
}

/// Three distinct prompt kinds, uniform without replacement from the default
/// set of four (or all five with `include_scribble`).
pub fn sample_prompt_kinds_with(rng_seed: u64, include_scribble: bool) -> Vec<PromptKind> {
    sample_prompt_kinds_n(rng_seed, 3, include_scribble)
}

/// `n` distinct kinds (capped at the pool size), in sampled order.
pub fn sample_prompt_kinds_n(rng_seed: u64, n: usize, include_scribble: bool) -> Vec<PromptKind> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pool: &[PromptKind] = if include_scribble { &PromptKind::ALL } else { &PromptKind::DEFAULT_SET };
    pool.choose_multiple(&mut rng, n).copied().collect()
}

pub fn sample_prompt_kinds(rng_seed: u64) -> Vec<PromptKind> {
    sample_prompt_kinds_with(rng_seed, false)
}

pub fn ellipse_geometry(target: &BBox, ratio: f64) -> PromptGeometry {
    PromptGeometry::Ellipse {
        center: target.center(),
        semi_axes: (target.w / 2.0 * ratio, target.h / 2.0 * ratio),
        ratio,
    }
}

fn point_in<R: Rng>(rng: &mut R, b: &BBox) -> Point {
    (b.x + rng.gen::<f64>() * b.w, b.y + rng.gen::<f64>() * b.h)
}

fn border_point<R: Rng>(rng: &mut R, w: f64, h: f64) -> Point {
    let s = rng.gen::<f64>() * 2.0 * (w + h);
    if s < w {
        (s, 0.0)
    } else if s < w + h {
        (w, s - w)
    } else if s < 2.0 * w + h {
        (2.0 * w + h - s, h)
    } else {
        (0.0, 2.0 * (w + h) - s)
    }
}

pub fn make_prompt(
    kind: PromptKind,
    target_bbox: BBox,
    image_size: (u32, u32),
    rng_seed: u64,
) -> Result<VisualPrompt, PromptError> {
    if !(target_bbox.area() > 0.0) {
        return Err(PromptError::DegenerateBBox);
    }
    let (w, h) = (image_size.0 as f64, image_size.1 as f64);
    if !target_bbox.within(w, h) {
        return Err(PromptError::OutOfBounds(image_size.0, image_size.1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let color = PROMPT_PALETTE[rng.gen_range(0..PROMPT_PALETTE.len())];
    let alpha = rng.gen_range(0.5..=1.0);
    let thickness = rng.gen_range(2..=4) as f64;
    let geometry = match kind {
        PromptKind::Arrow => {
            let c = target_bbox.center();
            let head = (c.0.clamp(0.0, w), c.1.clamp(0.0, h));
            let min_len = 0.25 * w.min(h);
            // prefer a tail far enough away for the arrow to read as one
            let mut tail = border_point(&mut rng, w, h);
            for _ in 0..16 {
                if (tail.0 - head.0).hypot(tail.1 - head.1) >= min_len {
                    break;
                }
                tail = border_point(&mut rng, w, h);
            }
            PromptGeometry::Arrow { tail, head }
        }
        PromptKind::Ellipse => ellipse_geometry(&target_bbox, rng.gen_range(ELLIPSE_RATIO.0..=ELLIPSE_RATIO.1)),
        PromptKind::BoundingBox => PromptGeometry::BoundingBox { bbox: target_bbox },
        PromptKind::Triangle => PromptGeometry::Triangle {
            vertices: [0, 1, 2].map(|_| point_in(&mut rng, &target_bbox)),
        },
        PromptKind::Scribble => PromptGeometry::Scribble {
            anchors: [0, 1, 2].map(|_| point_in(&mut rng, &target_bbox)),
        },
    };
    Ok(VisualPrompt {
        kind,
        geometry,
        color,
        alpha,
        thickness,
        target_bbox,
        image_size,
    })
}

#[derive(Debug, Clone)]
pub struct PromptedChart<'a> {
    pub base: &'a RenderedChart,
    pub prompt: VisualPrompt,
    pub image: RgbaImage,
}

/// Source-over blends the prompt into a copy of the chart image.
pub fn overlay<'a>(base: &'a RenderedChart, p: &VisualPrompt) -> PromptedChart<'a> {
    let mut image = base.image.clone();
    image.blend_mask(&p.footprint(), p.color, p.alpha);
    PromptedChart {
        base,
        prompt: p.clone(),
        image,
    }
}
