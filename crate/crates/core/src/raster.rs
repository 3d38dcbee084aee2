//! Minimal RGBA raster: solid fills, coverage masks for stroked geometry,
//! an 8x8 bitmap font, and PNG encoding.

use std::io;

use font8x8::UnicodeFonts;

pub type Rgba = [u8; 4];

pub const GLYPH: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbaImage {
    pub fn new(width: u32, height: u32, fill: Rgba) -> Self {
        let mut data = Vec::with_capacity((width * height * 4) as usize);
        for _ in 0..width * height {
            data.extend_from_slice(&fill);
        }
        RgbaImage { width, height, data }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == (width * height * 4) as usize).then_some(RgbaImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        ((y * self.width + x) * 4) as usize
    }

    pub fn get(&self, x: u32, y: u32) -> Rgba {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2], self.data[o + 3]]
    }

    pub fn put(&mut self, x: u32, y: u32, c: Rgba) {
        let o = self.offset(x, y);
        self.data[o..o + 4].copy_from_slice(&c);
    }

    /// Fills the pixels whose centers fall inside `[x0, x1) x [y0, y1)`.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, c: Rgba) {
        let xs = pixel_span(x0, x1, self.width);
        let ys = pixel_span(y0, y1, self.height);
        for y in ys {
            for x in xs.clone() {
                self.put(x, y, c);
            }
        }
    }

    pub fn fill_mask(&mut self, mask: &Mask, c: Rgba) {
        for (x, y) in mask.pixels() {
            self.put(x, y, c);
        }
    }

    /// Source-over compositing of `color` at opacity `alpha` on every masked pixel.
    pub fn blend_mask(&mut self, mask: &Mask, color: Rgba, alpha: f64) {
        let a = (alpha * color[3] as f64 / 255.0).clamp(0.0, 1.0);
        for (x, y) in mask.pixels() {
            let dst = self.get(x, y);
            self.put(x, y, source_over(color, a, dst));
        }
    }

    /// Draws `text` with its top-left corner at (x, y), each font pixel
    /// scaled to `scale` x `scale` image pixels.
    pub fn draw_text(&mut self, text: &str, x: f64, y: f64, scale: u32, c: Rgba) {
        let x0 = x.round() as i64;
        let y0 = y.round() as i64;
        for (i, ch) in text.chars().enumerate() {
            let glyph = glyph(ch);
            let gx = x0 + (i as i64) * (GLYPH * scale) as i64;
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..8 {
                    if bits & (1 << col) == 0 {
                        continue;
                    }
                    for dy in 0..scale as i64 {
                        for dx in 0..scale as i64 {
                            let px = gx + col as i64 * scale as i64 + dx;
                            let py = y0 + row as i64 * scale as i64 + dy;
                            if px >= 0 && py >= 0 && (px as u32) < self.width && (py as u32) < self.height {
                                self.put(px as u32, py as u32, c);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().expect("png header into memory");
            w.write_image_data(&self.data).expect("png data into memory");
        }
        out
    }

    pub fn decode_png(bytes: &[u8]) -> io::Result<Self> {
        let decoder = png::Decoder::new(bytes);
        let mut reader = decoder.read_info().map_err(io::Error::other)?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).map_err(io::Error::other)?;
        if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Eight {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "expected 8-bit RGBA"));
        }
        buf.truncate(info.buffer_size());
        Ok(RgbaImage {
            width: info.width,
            height: info.height,
            data: buf,
        })
    }
}

pub fn source_over(src: Rgba, alpha: f64, dst: Rgba) -> Rgba {
    let mix = |s: u8, d: u8| (s as f64 * alpha + d as f64 * (1.0 - alpha)).round() as u8;
    let da = dst[3] as f64 / 255.0;
    let out_a = alpha + da * (1.0 - alpha);
    [
        mix(src[0], dst[0]),
        mix(src[1], dst[1]),
        mix(src[2], dst[2]),
        (out_a * 255.0).round() as u8,
    ]
}

fn glyph(ch: char) -> [u8; 8] {
    font8x8::BASIC_FONTS
        .get(ch)
        .or_else(|| font8x8::LATIN_FONTS.get(ch))
        .or_else(|| font8x8::GREEK_FONTS.get(ch))
        .or_else(|| font8x8::MISC_FONTS.get(ch))
        // hollow box for anything the atlas lacks
        .unwrap_or([0x7e, 0x42, 0x42, 0x42, 0x42, 0x42, 0x7e, 0x00])
}

pub fn text_width(text: &str, scale: u32) -> f64 {
    (text.chars().count() as u32 * GLYPH * scale) as f64
}

fn pixel_span(a: f64, b: f64, limit: u32) -> std::ops::Range<u32> {
    let lo = (a - 0.5).ceil().max(0.0);
    let hi = (b - 0.5).ceil().min(limit as f64);
    if hi <= lo {
        0..0
    } else {
        lo as u32..hi as u32
    }
}

/// Binary coverage over an image grid. A pixel is covered when its center is
/// inside the shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32) {
        if x < self.width && y < self.height {
            self.bits[(y * self.width + x) as usize] = true;
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }

    /// Grows the mask by one pixel in all eight directions.
    pub fn dilate(&self) -> Mask {
        let mut out = self.clone();
        for (x, y) in self.pixels() {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 {
                        out.set(nx as u32, ny as u32);
                    }
                }
            }
        }
        out
    }

    fn bounded(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> (std::ops::Range<u32>, std::ops::Range<u32>) {
        (
            pixel_span(x0.floor(), x1.ceil() + 1.0, self.width),
            pixel_span(y0.floor(), y1.ceil() + 1.0, self.height),
        )
    }

    /// Covers pixels within `width / 2` of the segment a-b.
    pub fn stroke_segment(&mut self, a: (f64, f64), b: (f64, f64), width: f64) {
        let r = width / 2.0;
        let (xs, ys) = self.bounded(a.0.min(b.0) - r, a.1.min(b.1) - r, a.0.max(b.0) + r, a.1.max(b.1) + r);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        for y in ys {
            for x in xs.clone() {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
                };
                let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
                if qx * qx + qy * qy <= r * r {
                    self.set(x, y);
                }
            }
        }
    }

    pub fn stroke_polyline(&mut self, points: &[(f64, f64)], width: f64, closed: bool) {
        for w in points.windows(2) {
            self.stroke_segment(w[0], w[1], width);
        }
        if closed && points.len() > 2 {
            self.stroke_segment(points[points.len() - 1], points[0], width);
        }
    }

    pub fn fill_disk(&mut self, c: (f64, f64), r: f64) {
        self.stroke_segment(c, c, 2.0 * r);
    }
}
