//! Simulated OCR over a rendered chart's text annotations: reading order,
//! a seeded noise model, and the layout that combines image, instruction
//! and OCR text into one model input.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::render::{BBox, RenderedChart, TextAnnotation};

pub const TOKEN_SEPARATOR: &str = " ";
pub const OCR_HEADER: &str = "OCR:";
pub const IMAGE_PLACEHOLDER: &str = "<image>";

#[derive(Debug, thiserror::Error)]
pub enum OcrError {
    #[error("{name} = {value} is outside [0, 1]")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("cannot read chart {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model input: {0}")]
    MalformedLayout(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrToken {
    pub content: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseStats {
    pub chars_seen: usize,
    pub chars_substituted: usize,
    pub tokens_dropped: usize,
    pub merges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub tokens: Vec<OcrToken>,
    pub prompt_string: String,
    pub stats: NoiseStats,
}

impl OcrResult {
    fn from_tokens(tokens: Vec<OcrToken>, stats: NoiseStats) -> Self {
        let prompt_string = tokens.iter().map(|t| t.content.as_str()).collect::<Vec<_>>().join(TOKEN_SEPARATOR);
        OcrResult {
            tokens,
            prompt_string,
            stats,
        }
    }

    /// Keeps the longest token prefix whose prompt fits in `max_chars`.
    pub fn truncated(&self, max_chars: usize) -> OcrResult {
        let mut len = 0;
        let mut keep = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            let add = t.content.chars().count() + usize::from(i > 0);
            if len + add > max_chars {
                break;
            }
            len += add;
            keep = i + 1;
        }
        OcrResult::from_tokens(self.tokens[..keep].to_vec(), self.stats)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub char_substitution_rate: f64,
    pub token_drop_rate: f64,
    pub merge_adjacent_rate: f64,
    pub rng_seed: u64,
}

impl NoiseConfig {
    pub fn none() -> Self {
        NoiseConfig::default()
    }

    pub fn validate(&self) -> Result<(), OcrError> {
        for (name, value) in [
            ("char_substitution_rate", self.char_substitution_rate),
            ("token_drop_rate", self.token_drop_rate),
            ("merge_adjacent_rate", self.merge_adjacent_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(OcrError::InvalidRate { name, value });
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.char_substitution_rate == 0.0 && self.token_drop_rate == 0.0 && self.merge_adjacent_rate == 0.0
    }
}

/// Characters real OCR engines commonly confuse.
pub fn confusable(c: char) -> Option<char> {
    Some(match c {
        '0' => 'O',
        'O' => '0',
        'o' => '0',
        '1' => 'l',
        'l' => '1',
        'I' => '1',
        'i' => 'l',
        '5' => 'S',
        'S' => '5',
        's' => '5',
        '8' => 'B',
        'B' => '8',
        '2' => 'Z',
        'Z' => '2',
        '6' => 'b',
        'b' => '6',
        '9' => 'g',
        'g' => '9',
        'e' => 'c',
        'c' => 'e',
        'u' => 'v',
        'v' => 'u',
        'n' => 'h',
        'h' => 'n',
        '.' => ',',
        ',' => '.',
        _ => return None,
    })
}

const FALLBACK: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

fn substitute<R: Rng>(c: char, rng: &mut R) -> char {
    confusable(c).unwrap_or_else(|| loop {
        let r = FALLBACK[rng.gen_range(0..FALLBACK.len())] as char;
        if r != c {
            break r;
        }
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Reading order for boxes: rows top to bottom, left to right within a row.
///
/// Boxes join a row band while their vertical center is less than half the
/// median box height below the band's first (highest) center. Bands are
/// ordered by their top edge and members by left edge; equal keys keep input
/// order.
pub fn scan_order_indices(boxes: &[BBox]) -> Vec<usize> {
    let tol = median(boxes.iter().map(|b| b.h).collect()) / 2.0;
    let cy = |i: usize| boxes[i].y + boxes[i].h / 2.0;
    let mut by_center: Vec<usize> = (0..boxes.len()).collect();
    by_center.sort_by(|&a, &b| cy(a).total_cmp(&cy(b)));

    let mut bands: Vec<Vec<usize>> = Vec::new();
    for i in by_center {
        match bands.last_mut() {
            Some(band) if cy(i) - cy(band[0]) < tol => band.push(i),
            _ => bands.push(vec![i]),
        }
    }
    for band in &mut bands {
        band.sort_by(|&a, &b| boxes[a].x.total_cmp(&boxes[b].x).then(a.cmp(&b)));
    }
    let top = |band: &Vec<usize>| band.iter().map(|&i| boxes[i].y).fold(f64::INFINITY, f64::min);
    bands.sort_by(|a, b| top(a).total_cmp(&top(b)));
    bands.concat()
}

pub fn scan_order(texts: &[TextAnnotation]) -> Vec<TextAnnotation> {
    let boxes: Vec<BBox> = texts.iter().map(|t| t.bbox).collect();
    scan_order_indices(&boxes).into_iter().map(|i| texts[i].clone()).collect()
}

/// Applies drop, then substitution, then merging, each independently at its
/// configured rate.
pub fn apply_noise(tokens: Vec<OcrToken>, noise: &NoiseConfig) -> (Vec<OcrToken>, NoiseStats) {
    let mut stats = NoiseStats::default();
    if noise.is_identity() {
        stats.chars_seen = tokens.iter().map(|t| t.content.chars().count()).sum();
        return (tokens, stats);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
    let mut kept = Vec::with_capacity(tokens.len());
    for t in tokens {
        if rng.gen_bool(noise.token_drop_rate) {
            stats.tokens_dropped += 1;
        } else {
            kept.push(t);
        }
    }
    for t in &mut kept {
        let mut out = String::with_capacity(t.content.len());
        for c in t.content.chars() {
            stats.chars_seen += 1;
            if rng.gen_bool(noise.char_substitution_rate) {
                stats.chars_substituted += 1;
                out.push(substitute(c, &mut rng));
            } else {
                out.push(c);
            }
        }
        t.content = out;
    }
    let mut merged: Vec<OcrToken> = Vec::with_capacity(kept.len());
    for t in kept {
        match merged.last_mut() {
            Some(prev) if rng.gen_bool(noise.merge_adjacent_rate) => {
                stats.merges += 1;
                prev.content.push_str(&t.content);
                prev.bbox = prev.bbox.union(&t.bbox);
            }
            _ => merged.push(t),
        }
    }
    (merged, stats)
}

/// Reads the chart's text in scan order, then applies noise.
pub fn extract(c: &RenderedChart, noise: &NoiseConfig) -> Result<OcrResult, OcrError> {
    noise.validate()?;
    let tokens = scan_order(c.texts())
        .into_iter()
        .map(|t| OcrToken {
            content: t.content,
            bbox: t.bbox,
        })
        .collect();
    let (tokens, stats) = apply_noise(tokens, noise);
    Ok(OcrResult::from_tokens(tokens, stats))
}

/// Anything that turns an image file into ordered text tokens.
pub trait OcrEngine {
    fn recognize(&self, image_path: &Path) -> Result<Vec<OcrToken>, OcrError>;
}

/// Reads the annotation sidecar written next to a rendered chart.
#[derive(Debug, Clone, Default)]
pub struct SimulatedOcr {
    pub noise: NoiseConfig,
}

impl OcrEngine for SimulatedOcr {
    fn recognize(&self, image_path: &Path) -> Result<Vec<OcrToken>, OcrError> {
        let chart = RenderedChart::load(image_path).map_err(|source| OcrError::Io {
            path: image_path.display().to_string(),
            source,
        })?;
        Ok(extract(&chart, &self.noise)?.tokens)
    }
}

/// Model input in the order image, instruction, OCR text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInputLayout {
    pub image_ref: String,
    pub instruction: String,
    pub ocr_prompt: String,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape(s: &str) -> Result<String, OcrError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(OcrError::MalformedLayout(format!("bad escape \\{}", other.unwrap_or(' ')))),
        }
    }
    Ok(out)
}

impl ModelInputLayout {
    /// Three lines: the image placeholder, the instruction, and the OCR
    /// section. Newlines inside fields are escaped.
    pub fn serialize(&self) -> String {
        let mut s = format!("{IMAGE_PLACEHOLDER}\n{}\n{OCR_HEADER}", escape(&self.instruction));
        if !self.ocr_prompt.is_empty() {
            s.push(' ');
            s.push_str(&escape(&self.ocr_prompt));
        }
        s
    }

    /// Recovers `(instruction, ocr_prompt)` from `serialize` output.
    pub fn parse(text: &str) -> Result<(String, String), OcrError> {
        let lines: Vec<&str> = text.split('\n').collect();
        let [image, instruction, ocr] = lines[..] else {
            return Err(OcrError::MalformedLayout(format!("expected 3 lines, found {}", lines.len())));
        };
        if image != IMAGE_PLACEHOLDER {
            return Err(OcrError::MalformedLayout("missing image placeholder".into()));
        }
        let body = ocr
            .strip_prefix(OCR_HEADER)
            .ok_or_else(|| OcrError::MalformedLayout("missing OCR section".into()))?;
        let body = body.strip_prefix(' ').unwrap_or(body);
        Ok((unescape(instruction)?, unescape(body)?))
    }
}

pub fn assemble_model_input(ocr: &OcrResult, instruction: &str, image_ref: &str) -> ModelInputLayout {
    ModelInputLayout {
        image_ref: image_ref.to_string(),
        instruction: instruction.to_string(),
        ocr_prompt: ocr.prompt_string.clone(),
    }
}
