//! Question generation grounded in a table: low-level template questions,
//! multi-turn conversations, step-by-step table answers and instruction
//! phrasings.

mod cot;
mod external;
mod instructions;
mod multi_turn;
mod summary;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::render::ChartSpec;
use crate::table::{ChartType, DataTable};

pub use cot::{gen_cot_table_answer, parse_cot_answer, CoTAnswer};
pub use summary::gen_summary;
pub use external::{ExternalChatClient, ExternalChatConfig, MULTI_TURN_PROMPT};
pub use instructions::{
    instruction_templates, sample_instruction, InstructionTask, BRIEF_SUMMARY_TEMPLATES, CHART_TO_TABLE_TEMPLATES,
    DETAILED_SUMMARY_TEMPLATES,
};
pub use multi_turn::{
    gen_multi_turn, gen_multi_turn_batch, Conversation, GeneratorBackend, MultiTurn, MultiTurnJob, QaCategory, Round,
    Speaker, Turn,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QaError {
    #[error("template {0} does not apply: {1}")]
    TemplateInapplicable(&'static str, String),
    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),
    #[error("table has no numeric values")]
    NoNumericData,
    #[error("generator backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("generated answers contradict the table: {0}")]
    ValidationFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaTask {
    Reasoning,
    Extremum,
    Range,
    Retrieval,
}

/// A table element: one numeric cell addressed by series and category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementRef {
    pub series: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QASample {
    pub question: String,
    pub answer: String,
    pub task: QaTask,
    pub target_elements: Vec<ElementRef>,
    pub numeric_answer: Option<f64>,
    pub template_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// Which operation a template asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateOp {
    SumPair,
    DiffPair,
    MeanPair,
    SumAll,
    MeanAll,
    SumCross,
    MeanCross,
    DiffCross,
    Max,
    Min,
    Range,
    CountBars,
    CountPieces,
    Value,
    ValueIn,
}

/// The chart family a template's wording refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartWord {
    Any,
    Bar,
    Line,
    Pie,
}

impl ChartWord {
    pub fn matches(self, t: ChartType) -> bool {
        match self {
            ChartWord::Any => true,
            ChartWord::Bar => t.is_bar_family(),
            ChartWord::Line => t.is_line_family(),
            ChartWord::Pie => t == ChartType::Pie,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub id: &'static str,
    pub task: QaTask,
    pub op: TemplateOp,
    pub chart: ChartWord,
    pub text: &'static str,
}

const fn tpl(id: &'static str, task: QaTask, op: TemplateOp, chart: ChartWord, text: &'static str) -> Template {
    Template {
        id,
        task,
        op,
        chart,
        text,
    }
}

use ChartWord as W;
use QaTask as K;
use TemplateOp as O;

pub const TEMPLATES: [Template; 21] = [
    tpl("reasoning.sum_pair", K::Reasoning, O::SumPair, W::Any,
        "What is the sum of {first_x_axis} and {second_x_axis} in this chart?"),
    tpl("reasoning.diff_pair", K::Reasoning, O::DiffPair, W::Any,
        "What is the difference of {first_x_axis} and {second_x_axis} in this chart?"),
    tpl("reasoning.mean_pair", K::Reasoning, O::MeanPair, W::Any,
        "What is the mean value of {first_x_axis} and {second_x_axis} in this chart?"),
    tpl("reasoning.sum_all", K::Reasoning, O::SumAll, W::Any,
        "What is the total sum of all the elements in this chart?"),
    tpl("reasoning.mean_all", K::Reasoning, O::MeanAll, W::Any,
        "What is the mean value of all the elements in this chart?"),
    tpl("reasoning.sum_cross", K::Reasoning, O::SumCross, W::Any,
        "What is the sum of {first_x_axis} in {first_y_axis} and {second_x_axis} in {second_y_axis} in this chart?"),
    tpl("reasoning.mean_cross", K::Reasoning, O::MeanCross, W::Any,
        "What is the mean value of {first_x_axis} in {first_y_axis} and {second_x_axis} in {second_y_axis} in this chart?"),
    tpl("reasoning.diff_cross", K::Reasoning, O::DiffCross, W::Any,
        "What is the difference of {first_x_axis} in {first_y_axis} and {second_x_axis} in {second_y_axis} in this chart?"),
    tpl("extremum.max_bar", K::Extremum, O::Max, W::Bar, "What is the maximum value in this bar chart?"),
    tpl("extremum.min_bar", K::Extremum, O::Min, W::Bar, "What is the minimum value in this bar chart?"),
    tpl("extremum.max_line", K::Extremum, O::Max, W::Line, "What is the maximum value in this line chart?"),
    tpl("extremum.min_line", K::Extremum, O::Min, W::Line, "What is the minimum value in this line chart?"),
    tpl("extremum.max_pie", K::Extremum, O::Max, W::Pie, "What is the maximum value in this pie chart?"),
    tpl("extremum.min_pie", K::Extremum, O::Min, W::Pie, "What is the minimum value in this pie chart?"),
    tpl("range.bar", K::Range, O::Range, W::Bar, "What is the range of values in this bar chart?"),
    tpl("range.line", K::Range, O::Range, W::Line, "What is the range of values in this line chart?"),
    tpl("range.pie", K::Range, O::Range, W::Pie, "What is the range of values in this pie chart?"),
    tpl("retrieval.count_bars", K::Retrieval, O::CountBars, W::Bar, "How many bars are there in this bar chart?"),
    tpl("retrieval.count_pieces", K::Retrieval, O::CountPieces, W::Pie, "How many pieces are there in this pie chart?"),
    tpl("retrieval.value", K::Retrieval, O::Value, W::Any, "What is the value of {x_axis} in this chart?"),
    tpl("retrieval.value_in", K::Retrieval, O::ValueIn, W::Any, "What is the value of {x_axis} in {y_axis}?"),
];

pub fn template(id: &str) -> Option<&'static Template> {
    TEMPLATES.iter().find(|t| t.id == id)
}

/// Rounds to two decimals, ties to even. Values within 1e-7 cents of a tie
/// count as the tie so that float noise in sums does not break it.
pub fn round_half_even_2(v: f64) -> f64 {
    let s = v * 100.0;
    let f = s.floor();
    let r = if (s - f - 0.5).abs() < 1e-7 {
        if f.rem_euclid(2.0) == 0.0 {
            f
        } else {
            f + 1.0
        }
    } else {
        s.round()
    };
    r / 100.0
}

/// Canonical numeric answer: at most two decimals, trailing zeros trimmed.
pub fn format_answer(v: f64) -> String {
    let s = format!("{:.2}", round_half_even_2(v));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Element<'a> {
    pub series: &'a str,
    pub category: &'a str,
    pub value: f64,
}

impl Element<'_> {
    fn to_ref(&self) -> ElementRef {
        ElementRef {
            series: self.series.to_string(),
            category: self.category.to_string(),
        }
    }
}

/// All numeric cells, series-major then category order.
pub(crate) fn elements(t: &DataTable) -> Vec<Element<'_>> {
    t.series()
        .into_iter()
        .flat_map(|s| {
            s.points.into_iter().map(move |(category, value)| Element {
                series: s.name,
                category,
                value,
            })
        })
        .collect()
}

fn fill(text: &str, slots: &[(&str, &str)]) -> String {
    slots.iter().fold(text.to_string(), |acc, (k, v)| acc.replace(k, v))
}

/// Index of the extreme element; ties go to the earliest.
fn extreme(els: &[Element<'_>], max: bool) -> (usize, usize) {
    let mut best = 0;
    for (i, e) in els.iter().enumerate() {
        let better = if max { e.value > els[best].value } else { e.value < els[best].value };
        if better {
            best = i;
        }
    }
    let ties = els.iter().filter(|e| e.value == els[best].value).count();
    (best, ties)
}

fn check(tp: &Template, cond: bool, why: &str) -> Result<(), QaError> {
    if cond {
        Ok(())
    } else {
        Err(QaError::TemplateInapplicable(tp.id, why.to_string()))
    }
}

/// Instantiates one template against the table.
pub fn gen_template_qa<R: Rng>(
    t: &DataTable,
    chart_type: ChartType,
    tp: &Template,
    rng: &mut R,
) -> Result<QASample, QaError> {
    let els = elements(t);
    if els.is_empty() {
        return Err(QaError::NoNumericData);
    }
    let n_series = t.series().len();
    check(tp, tp.chart.matches(chart_type), "chart type does not match the wording")?;
    let mut metadata = BTreeMap::new();
    let pick2 = |rng: &mut R| {
        let idx = sample(rng, els.len(), 2);
        (&els[idx.index(0)], &els[idx.index(1)])
    };
    let (question, value, targets): (String, f64, Vec<&Element>) = match tp.op {
        O::SumPair | O::DiffPair | O::MeanPair => {
            check(tp, n_series == 1, "needs a single series")?;
            check(tp, els.len() >= 2, "needs two values")?;
            let (a, b) = pick2(rng);
            let q = fill(tp.text, &[("{first_x_axis}", a.category), ("{second_x_axis}", b.category)]);
            let v = match tp.op {
                O::SumPair => a.value + b.value,
                O::DiffPair => a.value - b.value,
                _ => (a.value + b.value) / 2.0,
            };
            (q, v, vec![a, b])
        }
        O::SumCross | O::MeanCross | O::DiffCross => {
            check(tp, n_series >= 2, "needs two series")?;
            let (a, b) = pick2(rng);
            let q = fill(
                tp.text,
                &[
                    ("{first_x_axis}", a.category),
                    ("{first_y_axis}", a.series),
                    ("{second_x_axis}", b.category),
                    ("{second_y_axis}", b.series),
                ],
            );
            let v = match tp.op {
                O::SumCross => a.value + b.value,
                O::DiffCross => a.value - b.value,
                _ => (a.value + b.value) / 2.0,
            };
            (q, v, vec![a, b])
        }
        O::SumAll | O::MeanAll => {
            check(tp, els.len() >= 2, "needs two values")?;
            let sum: f64 = els.iter().map(|e| e.value).sum();
            let v = if tp.op == O::SumAll { sum } else { sum / els.len() as f64 };
            (tp.text.to_string(), v, els.iter().collect())
        }
        O::Max | O::Min => {
            check(tp, els.len() >= 2, "needs two values")?;
            let (i, ties) = extreme(&els, tp.op == O::Max);
            if ties > 1 {
                metadata.insert("tie".into(), format!("{ties} elements tie; first in category order chosen"));
            }
            (tp.text.to_string(), els[i].value, vec![&els[i]])
        }
        O::Range => {
            check(tp, els.len() >= 2, "needs two values")?;
            let (hi, _) = extreme(&els, true);
            let (lo, _) = extreme(&els, false);
            (tp.text.to_string(), els[hi].value - els[lo].value, vec![&els[hi], &els[lo]])
        }
        O::CountBars | O::CountPieces => (tp.text.to_string(), els.len() as f64, els.iter().collect()),
        O::Value => {
            check(tp, n_series == 1, "needs a single series")?;
            let e = &els[rng.gen_range(0..els.len())];
            (fill(tp.text, &[("{x_axis}", e.category)]), e.value, vec![e])
        }
        O::ValueIn => {
            check(tp, n_series >= 2, "needs two series")?;
            let e = &els[rng.gen_range(0..els.len())];
            (fill(tp.text, &[("{x_axis}", e.category), ("{y_axis}", e.series)]), e.value, vec![e])
        }
    };
    let answer = format_answer(value);
    Ok(QASample {
        question,
        numeric_answer: answer.parse().ok(),
        answer,
        task: tp.task,
        target_elements: targets.into_iter().map(Element::to_ref).collect(),
        template_id: tp.id.to_string(),
        metadata,
    })
}

/// One sample for every template that applies to the table and chart type.
pub fn gen_low_level_qa(t: &DataTable, spec: &ChartSpec, rng_seed: u64) -> Result<Vec<QASample>, QaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::new();
    for tp in &TEMPLATES {
        match gen_template_qa(t, spec.chart_type, tp, &mut rng) {
            Ok(s) => out.push(s),
            Err(QaError::TemplateInapplicable(..)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
