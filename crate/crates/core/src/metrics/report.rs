//! Scoring prediction files, overall and per group.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bleu::BleuStats;
use super::{relaxed_accuracy, rms_f1, MetricError};
use crate::table::{extract_markdown_table, to_triples, ChartType, TableTripleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    DataRetrieval,
    VisualCompositional,
    Compositional,
    Visual,
}

impl QuestionType {
    pub fn name(self) -> &'static str {
        match self {
            QuestionType::DataRetrieval => "data_retrieval",
            QuestionType::VisualCompositional => "visual_compositional",
            QuestionType::Compositional => "compositional",
            QuestionType::Visual => "visual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: String,
    pub gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_type: Option<ChartType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_type: Option<QuestionType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Percentage of answers within the relaxed-accuracy rule.
    RelaxedAccuracy,
    /// Mean per-sample RMS-F1 in [0, 1]; texts hold markdown tables.
    RmsF1,
    /// Corpus BLEU in [0, 100].
    Bleu,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::RelaxedAccuracy => "relaxed_accuracy",
            Metric::RmsF1 => "rms_f1",
            Metric::Bleu => "bleu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    None,
    ChartType,
    QuestionType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub score: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub overall: f64,
    pub n: usize,
    pub groups: BTreeMap<String, GroupScore>,
}

impl MetricReport {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self.groups.keys().map(String::len).chain([7]).max().unwrap_or(7);
        let mut s = format!("metric: {}\n{:<width$}  {:>7}  {:>9}\n", self.metric.name(), "group", "n", "score");
        for (g, v) in &self.groups {
            let _ = writeln!(s, "{g:<width$}  {:>7}  {:>9.4}", v.n, v.score);
        }
        let _ = writeln!(s, "{:<width$}  {:>7}  {:>9.4}", "overall", self.n, self.overall);
        s
    }
}

fn group_key(r: &PredictionRecord, by: GroupBy) -> String {
    match by {
        GroupBy::None => "all".to_string(),
        GroupBy::ChartType => r.chart_type.map_or("unknown", |c| c.name()).to_string(),
        GroupBy::QuestionType => r.question_type.map_or("unknown", |q| q.name()).to_string(),
    }
}

fn table_triples(text: &str) -> Option<TableTripleSet> {
    extract_markdown_table(text).ok().map(|t| to_triples(&t))
}

/// Per-sample scores for the averaged metrics. A prediction without a
/// parsable table scores 0; a gold without one is an error.
fn sample_scores(records: &[PredictionRecord], metric: Metric) -> Result<Vec<f64>, MetricError> {
    records
        .iter()
        .map(|r| match metric {
            Metric::RelaxedAccuracy => Ok(if relaxed_accuracy(&r.prediction, &r.gold) { 100.0 } else { 0.0 }),
            Metric::RmsF1 => {
                let gold = extract_markdown_table(&r.gold).map_err(|e| MetricError::BadGoldTable {
                    id: r.id.clone(),
                    message: e.to_string(),
                })?;
                Ok(table_triples(&r.prediction).map_or(0.0, |p| rms_f1(&p, &to_triples(&gold))))
            }
            Metric::Bleu => unreachable!("corpus metric"),
        })
        .collect()
}

/// Scores records overall and per group. Accuracy and RMS-F1 average per
/// sample, so the overall score is the count-weighted mean of the groups;
/// BLEU is computed at corpus level within each group and overall.
pub fn breakdown(records: &[PredictionRecord], metric: Metric, by: GroupBy) -> Result<MetricReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let keys: Vec<String> = records.iter().map(|r| group_key(r, by)).collect();
    let mut groups: BTreeMap<String, GroupScore> = BTreeMap::new();
    let overall = match metric {
        Metric::Bleu => {
            let stats: Vec<BleuStats> = records.iter().map(|r| BleuStats::of_pair(&r.prediction, &r.gold)).collect();
            let mut per: BTreeMap<&str, (BleuStats, usize)> = BTreeMap::new();
            for (k, s) in keys.iter().zip(&stats) {
                let e = per.entry(k).or_default();
                e.0 = e.0.add(s);
                e.1 += 1;
            }
            for (k, (s, n)) in per {
                groups.insert(k.to_string(), GroupScore { score: s.score(), n });
            }
            stats.iter().fold(BleuStats::default(), |a, s| a.add(s)).score()
        }
        _ => {
            let scores = sample_scores(records, metric)?;
            let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
            for (k, s) in keys.iter().zip(&scores) {
                let e = sums.entry(k).or_default();
                e.0 += s;
                e.1 += 1;
            }
            for (k, (sum, n)) in sums {
                groups.insert(k.to_string(), GroupScore { score: sum / n as f64, n });
            }
            scores.iter().sum::<f64>() / scores.len() as f64
        }
    };
    Ok(MetricReport {
        metric,
        overall,
        n: records.len(),
        groups,
    })
}

/// Reads `{id, prediction, gold, chart_type?, question_type?}` lines.
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, MetricError> {
    let io = |source| MetricError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let r: PredictionRecord = serde_json::from_str(&line).map_err(|e| MetricError::MalformedPredictions {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !ids.insert(r.id.clone()) {
            return Err(MetricError::DuplicateId(r.id));
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, pred: &str, gold: &str, q: QuestionType) -> PredictionRecord {
        PredictionRecord {
            id: id.to_string(),
            prediction: pred.into(),
            gold: gold.into(),
            chart_type: None,
            question_type: Some(q),
        }
    }

    #[test]
    fn one_group_equals_overall() {
        let rs = vec![rec(0, "1", "1", QuestionType::Visual), rec(1, "2", "3", QuestionType::Visual)];
        let r = breakdown(&rs, Metric::RelaxedAccuracy, GroupBy::QuestionType).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups["visual"].score, r.overall);
        assert_eq!(r.overall, 50.0);
    }

    #[test]
    fn weighted_overall() {
        let rs = vec![
            rec(0, "1", "1", QuestionType::Visual),
            rec(1, "1", "1", QuestionType::Visual),
            rec(2, "a", "b", QuestionType::Compositional),
            rec(3, "a", "b", QuestionType::Compositional),
        ];
        let r = breakdown(&rs, Metric::RelaxedAccuracy, GroupBy::QuestionType).unwrap();
        assert_eq!(r.overall, 50.0);
        assert!(r.to_text().contains("compositional"));
    }

    #[test]
    fn four_question_types() {
        let qs = [
            QuestionType::DataRetrieval,
            QuestionType::VisualCompositional,
            QuestionType::Compositional,
            QuestionType::Visual,
        ];
        let rs: Vec<_> = (0..8).map(|i| rec(i, "x", "x", qs[i % 4])).collect();
        let r = breakdown(&rs, Metric::RelaxedAccuracy, GroupBy::QuestionType).unwrap();
        assert_eq!(r.groups.len(), 4);
    }

    #[test]
    fn rms_and_bleu() {
        let gold = "| k | v |\n|---|---|\n| A | 1 |\n| B | 2 |";
        let perm = "Some reasoning first.\n| k | v |\n|---|---|\n| B | 2 |\n| A | 1 |";
        let rs = vec![rec(0, perm, gold, QuestionType::Visual), rec(1, "no table", gold, QuestionType::Visual)];
        let r = breakdown(&rs, Metric::RmsF1, GroupBy::None).unwrap();
        assert_eq!(r.overall, 0.5);

        let rs = vec![rec(0, "the cat sat", "the cat sat on the mat", QuestionType::Visual)];
        let r = breakdown(&rs, Metric::Bleu, GroupBy::None).unwrap();
        assert!((r.overall - 100.0 * (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn malformed_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"prediction\":\"1\",\"gold\":\"1\"}\nnot json\n").unwrap();
        assert!(matches!(read_predictions(&p), Err(MetricError::MalformedPredictions { line: 2, .. })));
    }
}
