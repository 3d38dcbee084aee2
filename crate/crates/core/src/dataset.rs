//! Instruction records as JSON lines, per-stage manifests and dataset
//! statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::qa::Conversation;

pub const SCHEMA_VERSION: &str = "chartkit.record/1";

/// Metadata keys read by [`compute_stats`].
pub const META_SUBSET: &str = "subset";
pub const META_CHART_ID: &str = "chart_id";
pub const META_CHART_TYPE: &str = "chart_type";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: schema version {found:?}, expected {expected:?}")]
    SchemaVersionMismatch {
        line: usize,
        found: String,
        expected: &'static str,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {id:?}: task {task} is not part of stage {stage}")]
    ForbiddenTaskForStage { id: String, stage: Stage, task: Task },
    #[error("record {id:?} is tagged stage {found}, not {expected}")]
    StageMismatch { id: String, found: Stage, expected: Stage },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
    III,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::I, Stage::II, Stage::III];

    pub fn name(self) -> &'static str {
        match self {
            Stage::I => "I",
            Stage::II => "II",
            Stage::III => "III",
        }
    }

    pub fn from_name(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ChartToTable,
    Summarization,
    NumVisReasoning,
    OpenCqa,
    LowLevelQa,
    ChartQa,
    ChartToText,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::ChartToTable,
        Task::Summarization,
        Task::NumVisReasoning,
        Task::OpenCqa,
        Task::LowLevelQa,
        Task::ChartQa,
        Task::ChartToText,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::ChartToTable => "chart_to_table",
            Task::Summarization => "summarization",
            Task::NumVisReasoning => "num_vis_reasoning",
            Task::OpenCqa => "open_cqa",
            Task::LowLevelQa => "low_level_qa",
            Task::ChartQa => "chart_qa",
            Task::ChartToText => "chart_to_text",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the training-stage table: stage, task, source dataset and its
/// nominal sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRow {
    pub stage: Stage,
    pub task: Task,
    pub dataset: &'static str,
    pub samples: &'static str,
}

const fn row(stage: Stage, task: Task, dataset: &'static str, samples: &'static str) -> StageRow {
    StageRow {
        stage,
        task,
        dataset,
        samples,
    }
}

pub const STAGE_TABLE: [StageRow; 10] = [
    row(Stage::I, Task::ChartToTable, "OCR-aware Data Prompt", "495K"),
    row(Stage::II, Task::Summarization, "OCR-aware Data Prompt", "481K"),
    row(Stage::II, Task::NumVisReasoning, "OCR-aware Data Prompt", "5.5M"),
    row(Stage::II, Task::OpenCqa, "OCR-aware Data Prompt", "481K"),
    row(Stage::II, Task::LowLevelQa, "Visual Prompt", "418K"),
    row(Stage::III, Task::ChartToText, "Chart-to-Text", "35K"),
    row(Stage::III, Task::OpenCqa, "OpenCQA", "5K"),
    row(Stage::III, Task::ChartToTable, "ChartQA (subset)", "28K"),
    row(Stage::III, Task::ChartToTable, "Chart-to-Table Instruction-Following", "61K"),
    row(Stage::III, Task::ChartQa, "ChartQA (subset)", "28K"),
];

/// Tasks admissible in `stage`, in table order without repeats.
pub fn stage_tasks(stage: Stage) -> Vec<Task> {
    let mut out: Vec<Task> = Vec::new();
    for r in STAGE_TABLE.iter().filter(|r| r.stage == stage) {
        if !out.contains(&r.task) {
            out.push(r.task);
        }
    }
    out
}

pub fn is_admissible(stage: Stage, task: Task) -> bool {
    STAGE_TABLE.iter().any(|r| r.stage == stage && r.task == task)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub schema_version: String,
    pub id: String,
    /// Image path relative to the dataset root.
    pub image_ref: String,
    pub ocr_prompt: String,
    pub conversation: Conversation,
    pub stage: Stage,
    pub task: Task,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
    /// Fields written by newer tools, kept as-is.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl InstructionRecord {
    pub fn new(id: impl Into<String>, stage: Stage, task: Task, image_ref: impl Into<String>) -> Self {
        InstructionRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            id: id.into(),
            image_ref: image_ref.into(),
            ocr_prompt: String::new(),
            conversation: Conversation::default(),
            stage,
            task,
            metadata: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    fn meta_str(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).and_then(Value::as_str)
    }

    pub fn subset(&self) -> Option<&str> {
        self.meta_str(META_SUBSET)
    }

    pub fn chart_id(&self) -> Option<&str> {
        self.meta_str(META_CHART_ID)
    }

    pub fn chart_type(&self) -> Option<&str> {
        self.meta_str(META_CHART_TYPE)
    }

    pub fn check_stage(&self) -> Result<(), DatasetError> {
        if is_admissible(self.stage, self.task) {
            Ok(())
        } else {
            Err(DatasetError::ForbiddenTaskForStage {
                id: self.id.clone(),
                stage: self.stage,
                task: self.task,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// `None` for a file mixing stages.
    pub stage: Option<Stage>,
    pub task_counts: BTreeMap<Task, usize>,
    pub total: usize,
    pub schema_version: String,
    pub generator_config_hash: Option<String>,
}

impl Manifest {
    fn of(stage: Option<Stage>, records: &[InstructionRecord]) -> Self {
        let mut task_counts = BTreeMap::new();
        for r in records {
            *task_counts.entry(r.task).or_insert(0) += 1;
        }
        Manifest {
            stage,
            task_counts,
            total: records.len(),
            schema_version: SCHEMA_VERSION.to_string(),
            generator_config_hash: None,
        }
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.generator_config_hash = Some(hash.into());
        self
    }
}

/// Writes one JSON object per line. Ids must be unique and every record's
/// task must belong to its stage.
pub fn write_records(records: &[InstructionRecord], path: &Path) -> Result<Manifest, DatasetError> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(DatasetError::DuplicateId(r.id.clone()));
        }
        r.check_stage()?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            source: e.into(),
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    let stages: BTreeSet<Stage> = records.iter().map(|r| r.stage).collect();
    let stage = if stages.len() == 1 { stages.into_iter().next() } else { None };
    Ok(Manifest::of(stage, records))
}

pub fn read_records(path: &Path) -> Result<Vec<InstructionRecord>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            line: n,
            message: e.to_string(),
        })?;
        let version = v.get("schema_version").and_then(Value::as_str).unwrap_or_default();
        if version != SCHEMA_VERSION {
            return Err(DatasetError::SchemaVersionMismatch {
                line: n,
                found: version.to_string(),
                expected: SCHEMA_VERSION,
            });
        }
        out.push(serde_json::from_value(v).map_err(|e| DatasetError::Malformed {
            line: n,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Counts the records of one stage, rejecting any whose task the stage does
/// not admit.
pub fn build_stage_manifest(stage: Stage, records: &[InstructionRecord]) -> Result<Manifest, DatasetError> {
    for r in records {
        if r.stage != stage {
            return Err(DatasetError::StageMismatch {
                id: r.id.clone(),
                found: r.stage,
                expected: stage,
            });
        }
        r.check_stage()?;
    }
    Ok(Manifest::of(Some(stage), records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub chart_types: usize,
    pub charts: usize,
    pub samples: usize,
    pub samples_per_chart: f64,
}

impl SubsetStats {
    pub fn from_counts(chart_types: usize, charts: usize, samples: usize) -> Self {
        SubsetStats {
            chart_types,
            charts,
            samples,
            samples_per_chart: if charts == 0 { 0.0 } else { samples as f64 / charts as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub subsets: BTreeMap<String, SubsetStats>,
    pub total: SubsetStats,
}

impl Default for SubsetStats {
    fn default() -> Self {
        SubsetStats::from_counts(0, 0, 0)
    }
}

/// Per-subset counts of chart types, charts and samples. Records without a
/// subset tag are grouped under `"unassigned"`; charts are told apart by
/// their chart id, falling back to the image path.
pub fn compute_stats(records: &[InstructionRecord]) -> DatasetStats {
    #[derive(Default)]
    struct Acc<'a> {
        types: BTreeSet<&'a str>,
        charts: BTreeSet<&'a str>,
        samples: usize,
    }
    let mut groups: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut all = Acc::default();
    for r in records {
        let chart = r.chart_id().unwrap_or(&r.image_ref);
        for acc in [groups.entry(r.subset().unwrap_or("unassigned")).or_default(), &mut all] {
            if let Some(t) = r.chart_type() {
                acc.types.insert(t);
            }
            acc.charts.insert(chart);
            acc.samples += 1;
        }
    }
    let done = |a: &Acc| SubsetStats::from_counts(a.types.len(), a.charts.len(), a.samples);
    DatasetStats {
        subsets: groups.iter().map(|(k, a)| (k.to_string(), done(a))).collect(),
        total: done(&all),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn rec(id: &str, stage: Stage, task: Task) -> InstructionRecord {
        let mut r = InstructionRecord::new(id, stage, task, format!("images/{id}.png"));
        r.conversation.push_round("What is shown?\nAnswer briefly.", "A \"bar\"\nchart");
        r.metadata.insert(META_SUBSET.into(), json!("visual_prompt"));
        r.metadata.insert("seed".into(), json!(12345678901u64));
        r.metadata.insert("ratio".into(), json!(1.2345678901234567));
        r
    }

    #[test]
    fn admissibility_matrix() {
        assert_eq!(stage_tasks(Stage::I), [Task::ChartToTable]);
        assert_eq!(
            stage_tasks(Stage::II),
            [Task::Summarization, Task::NumVisReasoning, Task::OpenCqa, Task::LowLevelQa]
        );
        assert_eq!(stage_tasks(Stage::III), [Task::ChartToText, Task::OpenCqa, Task::ChartToTable, Task::ChartQa]);
    }

    #[test]
    fn stage_one_rejects_low_level_qa() {
        let r = rec("a", Stage::I, Task::LowLevelQa);
        assert!(matches!(
            build_stage_manifest(Stage::I, &[r]),
            Err(DatasetError::ForbiddenTaskForStage { .. })
        ));
        let ok = rec("b", Stage::II, Task::LowLevelQa);
        let m = build_stage_manifest(Stage::II, &[ok]).unwrap();
        assert_eq!(m.task_counts[&Task::LowLevelQa], 1);
        assert_eq!(m.stage, Some(Stage::II));
    }

    #[test]
    fn round_trip_with_newlines_and_extras() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut recs: Vec<_> = (0..1000).map(|i| rec(&format!("r{i:04}"), Stage::II, Task::LowLevelQa)).collect();
        recs[3].extra.insert("future_field".into(), json!({"x": [1, 2]}));
        let m = write_records(&recs, &path).unwrap();
        assert_eq!(m.total, 1000);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1000);
        assert!(text.contains("\\nAnswer briefly."));
        assert_eq!(read_records(&path).unwrap(), recs);
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let m = write_records(&[], &path).unwrap();
        assert_eq!((m.total, m.stage), (0, None));
        assert_eq!(std::fs::read(&path).unwrap(), b"");
        assert!(read_records(&path).unwrap().is_empty());
        assert_eq!(compute_stats(&[]), DatasetStats::default());
    }

    #[test]
    fn version_and_duplicate_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let r = rec("a", Stage::II, Task::LowLevelQa);
        assert!(matches!(write_records(&[r.clone(), r.clone()], &path), Err(DatasetError::DuplicateId(_))));
        let mut old = r;
        old.schema_version = "chartkit.record/0".into();
        write_records(&[old], &path).unwrap();
        assert!(matches!(
            read_records(&path),
            Err(DatasetError::SchemaVersionMismatch { line: 1, .. })
        ));
    }

    #[test]
    fn stats_ratio() {
        let s = SubsetStats::from_counts(6, 104_445, 417_780);
        assert_eq!(s.samples_per_chart, 4.0);

        let mut recs = Vec::new();
        for chart in 0..5 {
            for k in 0..6 {
                let mut r = rec(&format!("c{chart}-{k}"), Stage::II, Task::LowLevelQa);
                r.metadata.insert(META_CHART_ID.into(), json!(format!("c{chart}")));
                r.metadata.insert(META_CHART_TYPE.into(), json!(if chart % 2 == 0 { "bar" } else { "pie" }));
                recs.push(r);
            }
        }
        let st = compute_stats(&recs);
        let vp = &st.subsets["visual_prompt"];
        assert_eq!((vp.chart_types, vp.charts, vp.samples), (2, 5, 30));
        assert_eq!(vp.samples_per_chart, 6.0);
        recs.reverse();
        assert_eq!(compute_stats(&recs), st);
    }
}
