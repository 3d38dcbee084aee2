//! Evaluation metrics: relaxed accuracy for short answers, RMS-F1 for
//! extracted tables, corpus BLEU for free text, and grouped reports.

mod assignment;
mod bleu;
mod report;
mod rms;

pub use assignment::max_weight_assignment;
pub use bleu::{bleu, tokenize, BleuStats};
pub use report::{breakdown, read_predictions, GroupBy, GroupScore, Metric, MetricReport, PredictionRecord, QuestionType};
pub use rms::{edit_similarity, levenshtein, rms_f1, rms_score, RmsScore};

use crate::table::parse_number;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("line {line}: {message}")]
    MalformedPredictions { line: usize, message: String },
    #[error("duplicate prediction id {0:?}")]
    DuplicateId(String),
    #[error("record {id:?}: gold table does not parse: {message}")]
    BadGoldTable { id: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Share of the gold value a numeric answer may be off by.
pub const RELAXED_MARGIN: f64 = 0.05;

/// Numeric answers may differ from gold by 5% of gold (a zero gold needs an
/// exact zero); anything else must match after trimming and lowercasing.
pub fn relaxed_accuracy(pred: &str, gold: &str) -> bool {
    relaxed_accuracy_with(pred, gold, true)
}

pub fn relaxed_accuracy_with(pred: &str, gold: &str, ignore_case: bool) -> bool {
    let (p, g) = (pred.trim(), gold.trim());
    if let (Some((pv, _)), Some((gv, _))) = (parse_number(p), parse_number(g)) {
        return if gv == 0.0 {
            pv == 0.0
        } else {
            (pv - gv).abs() <= RELAXED_MARGIN * gv.abs()
        };
    }
    if ignore_case {
        p.to_lowercase() == g.to_lowercase()
    } else {
        p == g
    }
}
