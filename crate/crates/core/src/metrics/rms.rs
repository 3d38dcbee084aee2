//! Relative mapping similarity between two tables given as
//! (row, column, value) triples.

use serde::{Deserialize, Serialize};

use super::assignment::max_weight_assignment;
use crate::table::{Cell, TableTripleSet, Triple};

/// Relative numeric distances at or above this count as entirely wrong.
pub const THETA: f64 = 1.0;

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(ca != cb)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// 1 minus the edit distance normalised by the longer string.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        1.0
    } else {
        1.0 - levenshtein(a, b) as f64 / n as f64
    }
}

fn key(t: &Triple) -> String {
    format!("{} {}", t.row_key, t.col_key).to_lowercase()
}

fn value_similarity(pred: &Cell, gold: &Cell) -> f64 {
    match (pred.as_number(), gold.as_number()) {
        (Some(p), Some(g)) => {
            let rel = if g == 0.0 {
                if p == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (p - g).abs() / g.abs()
            };
            1.0 - (rel / THETA).min(1.0)
        }
        _ => edit_similarity(&pred.to_string().to_lowercase(), &gold.to_string().to_lowercase()),
    }
}

pub fn triple_similarity(pred: &Triple, gold: &Triple) -> f64 {
    edit_similarity(&key(pred), &key(gold)) * value_similarity(&pred.value, &gold.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn rms_score(pred: &TableTripleSet, gold: &TableTripleSet) -> RmsScore {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => {
            return RmsScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            }
        }
        (true, false) | (false, true) => {
            return RmsScore {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        }
        _ => {}
    }
    let w: Vec<Vec<f64>> = pred
        .triples()
        .iter()
        .map(|p| gold.triples().iter().map(|g| triple_similarity(p, g)).collect())
        .collect();
    let mass: f64 = max_weight_assignment(&w)
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| w[r][c]))
        .sum();
    let precision = mass / pred.len() as f64;
    let recall = mass / gold.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RmsScore { precision, recall, f1 }
}

/// F1 of [`rms_score`]. Two empty tables score 1, one empty side scores 0.
pub fn rms_f1(pred: &TableTripleSet, gold: &TableTripleSet) -> f64 {
    rms_score(pred, gold).f1
}
