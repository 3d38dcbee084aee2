//! OpenAI-compatible chat-completion client used as an alternative
//! multi-turn generator. Requests and responses are appended to an audit log.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::multi_turn::{Conversation, MultiTurn, Round};
use super::{elements, QaError};
use crate::table::{parse_number, serialize_table, DataTable, TableFormat};

/// Instruction block sent ahead of each table.
pub const MULTI_TURN_PROMPT: &str = "You are an AI visual assistant that excels at chart figures. You are provided with a text description (chart summary) of a chart image and raw data values about the same chart. You don't have access to the actual image. Your task is to design question-answer pair(s) between a person (User) inquiring about the chart image and you (Assistant) responding to their questions.
Below are requirements for generating the question-answer pair(s):
- The answers should be a single word or phrase, and in a tone that a visual AI assistant is seeing the chart figure and answering the question.
- Ask diverse questions and give corresponding answers. Include questions asking about (1) various comparative aspects of chart image data, relationships between data points, changes over time or categories, and presence within specific ranges. (2) various numerical knowledge of chart data, including sums, differences, averages, medians, ratios, and statistical evaluations within the context of chart elements like legend labels and axis ticks or statistical measures like standard deviation, variance, and correlation and so on.
- The conversation should include at least 2-3 turns of questions and answers.
- Only include questions that have definite answers:(1) one can see in the chart figure that the question asks about and can answer confidently; (2) one can determine confidently from the chart figure that it is not in the chart figure. Do not ask any question that cannot be answered confidently.
- In addition, you are provided with some examples of question-answer pair(s) between a user and you(assistant).";

const IN_CONTEXT_EXAMPLE: &str = "User: Which year has the highest revenue?\nAssistant: 2021\nUser: What is the sum of revenue in 2020 and 2021?\nAssistant: 57.5";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalChatConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer key.
    pub api_key_env: String,
    /// Fail with `ValidationFailed` when answers disagree with the table.
    pub strict: bool,
    pub timeout_secs: u64,
    pub audit_log: Option<PathBuf>,
    pub max_in_flight: usize,
}

impl Default for ExternalChatConfig {
    fn default() -> Self {
        ExternalChatConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            strict: false,
            timeout_secs: 60,
            audit_log: None,
            max_in_flight: 4,
        }
    }
}

pub struct ExternalChatClient {
    config: ExternalChatConfig,
    http: reqwest::blocking::Client,
    audit: Option<Mutex<File>>,
}

impl ExternalChatClient {
    pub fn new(config: ExternalChatConfig) -> Result<Self, QaError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| QaError::BackendUnavailable(e.to_string()))?;
        let audit = match &config.audit_log {
            Some(p) => Some(Mutex::new(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| QaError::BackendUnavailable(format!("audit log {}: {e}", p.display())))?,
            )),
            None => None,
        };
        Ok(ExternalChatClient { config, http, audit })
    }

    pub fn config(&self) -> &ExternalChatConfig {
        &self.config
    }

    fn audit(&self, id: &str, request: &Value, response: Result<&Value, &str>) {
        let Some(f) = &self.audit else { return };
        let line = match response {
            Ok(r) => json!({"id": id, "request": request, "response": r}),
            Err(e) => json!({"id": id, "request": request, "error": e}),
        };
        let mut f = f.lock().expect("audit lock");
        // the audit trail is best effort; generation does not depend on it
        let _ = writeln!(f, "{line}");
    }

    fn request_body(&self, t: &DataTable, seed: u64) -> Value {
        let user = format!(
            "{IN_CONTEXT_EXAMPLE}\nThe chart description: {}\nThe raw data: {}",
            describe(t),
            serialize_table(t, TableFormat::Markdown).trim_end()
        );
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": MULTI_TURN_PROMPT},
                {"role": "user", "content": user},
            ],
            "temperature": 0,
            "seed": seed,
        })
    }

    pub(crate) fn generate(&self, id: &str, t: &DataTable, seed: u64) -> Result<MultiTurn, QaError> {
        let key = std::env::var(&self.config.api_key_env)
            .map_err(|_| QaError::BackendUnavailable(format!("environment variable {} not set", self.config.api_key_env)))?;
        let body = self.request_body(t, seed);
        let resp = self
            .http
            .post(&self.config.endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json::<Value>());
        let resp = match resp {
            Ok(v) => {
                self.audit(id, &body, Ok(&v));
                v
            }
            Err(e) => {
                self.audit(id, &body, Err(&e.to_string()));
                return Err(QaError::BackendUnavailable(e.to_string()));
            }
        };
        let content = resp["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| QaError::BackendUnavailable("response has no message content".into()))?
            .to_string();

        let rounds = parse_rounds(&content);
        let mut conversation = Conversation::default();
        for r in &rounds {
            conversation.push_round(&r.question, &r.answer);
        }
        let problem = if rounds.len() < 2 {
            Some(format!("{} question-answer rounds", rounds.len()))
        } else {
            rounds
                .iter()
                .find(|r| !is_label(t, &r.answer) && r.numeric_answer.is_some_and(|v| !derivable(t, v)))
                .map(|r| format!("answer {:?} to {:?} is not derivable", r.answer, r.question))
        };
        if let (Some(p), true) = (&problem, self.config.strict) {
            return Err(QaError::ValidationFailed(p.clone()));
        }
        Ok(MultiTurn {
            conversation,
            rounds,
            backend: "external_chat_client".into(),
            validated: Some(problem.is_none()),
            raw_response: Some(content),
        })
    }
}

fn describe(t: &DataTable) -> String {
    let names: Vec<&str> = t.series().iter().map(|s| s.name).collect();
    let by = if t.category_label().is_empty() { "category" } else { t.category_label() };
    let title = if t.title().is_empty() { String::new() } else { format!("titled \"{}\" ", t.title()) };
    format!("A chart {title}showing {} by {by}.", names.join(", "))
}

/// Pairs `User:`/`Assistant:` lines (also `Q:`/`A:`) in order.
fn parse_rounds(content: &str) -> Vec<Round> {
    let mut rounds = Vec::new();
    let mut question: Option<String> = None;
    for line in content.lines().map(str::trim) {
        let strip = |prefixes: &[&str]| prefixes.iter().find_map(|p| line.strip_prefix(p)).map(|s| s.trim().to_string());
        if let Some(q) = strip(&["User:", "Q:", "Question:"]) {
            question = Some(q);
        } else if let Some(a) = strip(&["Assistant:", "A:", "Answer:"]) {
            if let Some(q) = question.take() {
                rounds.push(Round {
                    category: None,
                    numeric_answer: parse_number(&a).map(|(v, _)| v),
                    question: q,
                    answer: a,
                });
            }
        }
    }
    rounds
}

/// Answers naming a category or series (years, for instance) are labels,
/// not computed numbers.
fn is_label(t: &DataTable, answer: &str) -> bool {
    let a = answer.trim();
    t.categories().iter().any(|c| c == a) || t.series().iter().any(|s| s.name == a)
}

/// True when `v` is within 1% (or 0.01) of a value computable from the
/// table: a cell, a count, a pairwise sum/difference/ratio, or a series
/// total, mean or median.
fn derivable(t: &DataTable, v: f64) -> bool {
    let close = |c: f64| (v - c).abs() <= (0.01 * c.abs()).max(0.01);
    let els = elements(t);
    let mut candidates: Vec<f64> = vec![
        els.len() as f64,
        t.categories().len() as f64,
        t.series().len() as f64,
        els.iter().map(|e| e.value).sum(),
    ];
    for a in &els {
        candidates.push(a.value);
        for b in &els {
            candidates.extend([a.value + b.value, a.value - b.value, (a.value + b.value) / 2.0]);
            if b.value != 0.0 {
                candidates.push(a.value / b.value);
            }
        }
    }
    for s in t.series() {
        let mut vals: Vec<f64> = s.points.iter().map(|p| p.1).collect();
        let sum: f64 = vals.iter().sum();
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let median = if n % 2 == 1 { vals[n / 2] } else { (vals[n / 2 - 1] + vals[n / 2]) / 2.0 };
        candidates.extend([sum, sum / n as f64, median, vals[n - 1] - vals[0]]);
    }
    candidates.into_iter().any(close)
}
