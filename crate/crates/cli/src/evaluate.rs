use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chartkit::metrics::{breakdown, read_predictions, GroupBy, Metric, MetricReport};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTask {
    ChartQa,
    ChartToTable,
    ChartToText,
    OpenCqa,
}

impl EvalTask {
    pub fn from_name(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "chartqa" => Ok(EvalTask::ChartQa),
            "chart2table" => Ok(EvalTask::ChartToTable),
            "chart2text" => Ok(EvalTask::ChartToText),
            "opencqa" => Ok(EvalTask::OpenCqa),
            _ => Err(CliError::UnknownTask(s.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalTask::ChartQa => "chartqa",
            EvalTask::ChartToTable => "chart2table",
            EvalTask::ChartToText => "chart2text",
            EvalTask::OpenCqa => "opencqa",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            EvalTask::ChartQa => Metric::RelaxedAccuracy,
            EvalTask::ChartToTable => Metric::RmsF1,
            EvalTask::ChartToText | EvalTask::OpenCqa => Metric::Bleu,
        }
    }
}

pub fn parse_group_by(s: &str) -> Result<GroupBy, CliError> {
    match s {
        "none" => Ok(GroupBy::None),
        "chart_type" => Ok(GroupBy::ChartType),
        "question_type" => Ok(GroupBy::QuestionType),
        _ => Err(CliError::InvalidConfig(format!("unknown grouping {s:?}"))),
    }
}

/// Scores a predictions JSONL file and writes `<stem>.<task>.report.json`
/// and `.report.txt` into `out_dir` (default: next to the predictions).
pub fn cmd_evaluate(
    predictions: &Path,
    task: &str,
    group_by: GroupBy,
    out_dir: Option<&Path>,
) -> anyhow::Result<(MetricReport, PathBuf)> {
    let task = EvalTask::from_name(task)?;
    let records = read_predictions(predictions)?;
    let report = breakdown(&records, task.metric(), group_by)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| predictions.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = predictions.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let json_path = dir.join(format!("{stem}.{}.report.json", task.name()));
    fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    let txt_path = json_path.with_extension("txt");
    fs::write(&txt_path, report.to_text()).with_context(|| format!("writing {}", txt_path.display()))?;
    Ok((report, json_path))
}
