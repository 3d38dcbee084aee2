use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::external::ExternalChatClient;
use super::{elements, format_answer, QaError};
use crate::table::DataTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Human,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub from: Speaker,
    pub value: String,
}

/// Alternating human/assistant turns, human first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Conversation {
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn push_round(&mut self, question: impl Into<String>, answer: impl Into<String>) {
        self.turns.push(Turn {
            from: Speaker::Human,
            value: question.into(),
        });
        self.turns.push(Turn {
            from: Speaker::Assistant,
            value: answer.into(),
        });
    }

    pub fn is_well_formed(&self) -> bool {
        self.turns.len().is_multiple_of(2)
            && self.turns.iter().enumerate().all(|(i, t)| {
                t.from == if i % 2 == 0 { Speaker::Human } else { Speaker::Assistant }
            })
    }

    pub fn rounds(&self) -> usize {
        self.turns.len() / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaCategory {
    Structural,
    Retrieval,
    Reasoning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub category: Option<QaCategory>,
    pub question: String,
    pub answer: String,
    pub numeric_answer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTurn {
    pub conversation: Conversation,
    pub rounds: Vec<Round>,
    pub backend: String,
    /// Whether numeric answers agree with the table (external backend only).
    pub validated: Option<bool>,
    pub raw_response: Option<String>,
}

pub enum GeneratorBackend {
    DeterministicTemplates,
    External(ExternalChatClient),
}

fn round(category: QaCategory, question: String, answer: String) -> Round {
    Round {
        category: Some(category),
        numeric_answer: answer.parse().ok(),
        question,
        answer,
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn structural<R: Rng>(t: &DataTable, rng: &mut R) -> Round {
    let n_series = t.series().len();
    let mut options: Vec<(String, String)> = vec![(
        "How many categories are shown on the x-axis?".into(),
        t.categories().len().to_string(),
    )];
    if n_series > 1 {
        options.push(("How many series does the legend list?".into(), n_series.to_string()));
    }
    if !t.category_label().is_empty() {
        options.push(("What does the x-axis represent?".into(), t.category_label().to_string()));
    }
    if !t.title().is_empty() {
        options.push(("What is the title of the chart?".into(), t.title().to_string()));
    }
    let (q, a) = options.swap_remove(rng.gen_range(0..options.len()));
    round(QaCategory::Structural, q, a)
}

fn retrieval<R: Rng>(t: &DataTable, rng: &mut R) -> Round {
    let els = elements(t);
    let series = t.series();
    let s = &series[rng.gen_range(0..series.len())];
    let what = if t.category_label().is_empty() { "category" } else { t.category_label() };
    match rng.gen_range(0..3) {
        0 => {
            let e = &els[rng.gen_range(0..els.len())];
            round(
                QaCategory::Retrieval,
                format!("What is the value of {} in {}?", e.category, e.series),
                format_answer(e.value),
            )
        }
        k => {
            let max = k == 1;
            // first point wins ties
            let best = s.points.iter().fold(s.points[0], |b, p| {
                if (max && p.1 > b.1) || (!max && p.1 < b.1) {
                    *p
                } else {
                    b
                }
            });
            let word = if max { "highest" } else { "lowest" };
            round(
                QaCategory::Retrieval,
                format!("Which {what} has the {word} {}?", s.name),
                best.0.to_string(),
            )
        }
    }
}

fn reasoning<R: Rng>(t: &DataTable, rng: &mut R) -> Option<Round> {
    let series: Vec<_> = t.series().into_iter().filter(|s| s.points.len() >= 2).collect();
    let s = series.choose(rng)?;
    let vals: Vec<f64> = s.points.iter().map(|p| p.1).collect();
    let idx = rand::seq::index::sample(rng, vals.len(), 2);
    let (a, b) = (s.points[idx.index(0)], s.points[idx.index(1)]);
    let (q, v) = match rng.gen_range(0..5) {
        0 => (format!("What is the sum of {} across all categories?", s.name), vals.iter().sum::<f64>()),
        1 => (
            format!("What is the average {} across all categories?", s.name),
            vals.iter().sum::<f64>() / vals.len() as f64,
        ),
        2 => (format!("What is the difference between {} and {} in {}?", a.0, b.0, s.name), a.1 - b.1),
        3 => {
            let mut sorted = vals.clone();
            sorted.sort_by(f64::total_cmp);
            (format!("What is the median of {}?", s.name), median(&sorted))
        }
        _ if b.1 != 0.0 => (format!("What is the ratio of {} to {} in {}?", a.0, b.0, s.name), a.1 / b.1),
        _ => (format!("What is the difference between {} and {} in {}?", a.0, b.0, s.name), a.1 - b.1),
    };
    Some(round(QaCategory::Reasoning, q, format_answer(v)))
}

fn deterministic(t: &DataTable, rng_seed: u64) -> Result<MultiTurn, QaError> {
    if elements(t).is_empty() {
        return Err(QaError::NoNumericData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut cats = vec![QaCategory::Structural, QaCategory::Retrieval];
    if t.series().iter().any(|s| s.points.len() >= 2) {
        cats.push(QaCategory::Reasoning);
    }
    cats.shuffle(&mut rng);
    let n = rng.gen_range(2..=3).min(cats.len());
    let mut rounds = Vec::with_capacity(n);
    for &c in &cats[..n] {
        let r = match c {
            QaCategory::Structural => structural(t, &mut rng),
            QaCategory::Retrieval => retrieval(t, &mut rng),
            QaCategory::Reasoning => reasoning(t, &mut rng).expect("checked above"),
        };
        rounds.push(r);
    }
    let mut conversation = Conversation::default();
    for r in &rounds {
        conversation.push_round(&r.question, &r.answer);
    }
    Ok(MultiTurn {
        conversation,
        rounds,
        backend: "deterministic_templates".into(),
        validated: None,
        raw_response: None,
    })
}

/// Builds a 2-3 round conversation about the table.
pub fn gen_multi_turn(t: &DataTable, backend: &GeneratorBackend, rng_seed: u64) -> Result<MultiTurn, QaError> {
    match backend {
        GeneratorBackend::DeterministicTemplates => deterministic(t, rng_seed),
        GeneratorBackend::External(client) => client.generate(&crate::render::table_id(t), t, rng_seed),
    }
}

pub struct MultiTurnJob<'a> {
    pub id: String,
    pub table: &'a DataTable,
    pub seed: u64,
}

/// Runs jobs on at most `max_in_flight` threads. Results come back sorted
/// by job id, each paired with its id.
pub fn gen_multi_turn_batch(
    jobs: &[MultiTurnJob<'_>],
    backend: &GeneratorBackend,
    max_in_flight: usize,
) -> Vec<(String, Result<MultiTurn, QaError>)> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    std::thread::scope(|scope| {
        for _ in 0..max_in_flight.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = match backend {
                    GeneratorBackend::DeterministicTemplates => deterministic(job.table, job.seed),
                    GeneratorBackend::External(c) => c.generate(&job.id, job.table, job.seed),
                };
                results.lock().expect("results lock").push((job.id.clone(), r));
            });
        }
    });
    let mut out = results.into_inner().expect("results lock");
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{parse_table, TableFormat};

    fn table() -> DataTable {
        parse_table(b"Year,Men,Women\n2019,4,6\n2020,5,7.5\n2021,3,8", TableFormat::Csv)
            .unwrap()
            .with_title("Workers")
    }

    #[test]
    fn rounds_and_categories() {
        let t = table();
        for seed in 0..100 {
            let m = gen_multi_turn(&t, &GeneratorBackend::DeterministicTemplates, seed).unwrap();
            assert!((2..=3).contains(&m.conversation.rounds()));
            assert!(m.conversation.is_well_formed());
            let mut cats: Vec<_> = m.rounds.iter().map(|r| r.category.unwrap()).collect();
            cats.sort();
            cats.dedup();
            assert!(cats.len() >= 2);
            assert_eq!(m, gen_multi_turn(&t, &GeneratorBackend::DeterministicTemplates, seed).unwrap());
        }
    }

    #[test]
    fn single_value_table_still_has_two_categories() {
        let t = parse_table(b"k,v\nA,3", TableFormat::Csv).unwrap();
        let m = gen_multi_turn(&t, &GeneratorBackend::DeterministicTemplates, 1).unwrap();
        assert_eq!(m.rounds.len(), 2);
    }

    #[test]
    fn batch_is_sorted_and_matches_serial() {
        let t = table();
        let jobs: Vec<_> = (0..20)
            .rev()
            .map(|i| MultiTurnJob {
                id: format!("job-{i:02}"),
                table: &t,
                seed: i,
            })
            .collect();
        let out = gen_multi_turn_batch(&jobs, &GeneratorBackend::DeterministicTemplates, 4);
        assert_eq!(out.len(), 20);
        for (k, (id, r)) in out.iter().enumerate() {
            assert_eq!(id, &format!("job-{k:02}"));
            let serial = gen_multi_turn(&t, &GeneratorBackend::DeterministicTemplates, k as u64).unwrap();
            assert_eq!(r.as_ref().unwrap(), &serial);
        }
    }
}
